#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sae/arealevel.hpp"
#include "sae/assess.hpp"
#include "sae/csv.hpp"
#include "sae/direct.hpp"
#include "sae/error.hpp"
#include "sae/gp.hpp"
#include "sae/indirect.hpp"
#include "sae/population.hpp"
#include "sae/sampling.hpp"
#include "sae/spatial.hpp"
#include "sae/summary.hpp"
#include "sae/unitlevel.hpp"

namespace cli {

namespace fs = std::filesystem;

namespace {

// Seed streams under the root seed, one per stochastic stage.
enum Stream : std::uint64_t { graph = 1, frame = 2, population = 3, design = 4, chains = 5, aggregation = 6, loo = 7 };

std::uint64_t stream(const Context& ctx, Stream s) { return sae::derive_seed(ctx.seed(), s); }

// ---- config sections -------------------------------------------------------

sae::ChainConfig chain_config(const Context& ctx) {
  const json& m = ctx.section("mcmc");
  check_keys(m, "mcmc",
             {"n_iter", "burn_in", "thin", "n_chains", "adapt_window", "target_acceptance_scalar",
              "target_acceptance_block"});
  sae::ChainConfig c;
  c.n_iter = get_or<std::size_t>(m, "n_iter", c.n_iter);
  c.burn_in = get_or<std::size_t>(m, "burn_in", c.burn_in);
  c.thin = get_or<std::size_t>(m, "thin", c.thin);
  c.n_chains = get_or<std::size_t>(m, "n_chains", c.n_chains);
  c.adapt_window = get_or<std::size_t>(m, "adapt_window", c.adapt_window);
  c.target_acceptance_scalar = get_or<double>(m, "target_acceptance_scalar", c.target_acceptance_scalar);
  c.target_acceptance_block = get_or<double>(m, "target_acceptance_block", c.target_acceptance_block);
  c.seed = stream(ctx, Stream::chains);
  c.threads = ctx.threads;
  c.validate();
  return c;
}

sae::Bym2Priors bym2_priors(const Context& ctx) {
  const json& p = ctx.section("priors");
  check_keys(p, "priors",
             {"sd", "sd_U", "sd_alpha", "sd_value", "phi", "phi_U", "phi_alpha", "phi_value", "fixed_effect_sd",
              "range_rho0", "range_alpha", "nugget_U", "nugget_alpha", "smoothness", "fixed_range", "fixed_nugget"});
  sae::Bym2Priors b;
  const std::string sd = get_or<std::string>(p, "sd", "pc");
  if (sd == "pc") {
    b.sd = sae::SdPrior::pc;
  } else if (sd == "fixed") {
    b.sd = sae::SdPrior::fixed;
  } else {
    throw sae::ValidationError("priors.sd must be \"pc\" or \"fixed\"");
  }
  const std::string phi = get_or<std::string>(p, "phi", "pc");
  if (phi == "pc") {
    b.phi = sae::PhiPrior::pc;
  } else if (phi == "uniform") {
    b.phi = sae::PhiPrior::uniform;
  } else if (phi == "fixed") {
    b.phi = sae::PhiPrior::fixed;
  } else {
    throw sae::ValidationError("priors.phi must be \"pc\", \"uniform\" or \"fixed\"");
  }
  b.sd_U = get_or<double>(p, "sd_U", b.sd_U);
  b.sd_alpha = get_or<double>(p, "sd_alpha", b.sd_alpha);
  b.sd_value = get_or<double>(p, "sd_value", b.sd_value);
  b.phi_U = get_or<double>(p, "phi_U", b.phi_U);
  b.phi_alpha = get_or<double>(p, "phi_alpha", b.phi_alpha);
  b.phi_value = get_or<double>(p, "phi_value", b.phi_value);
  b.fixed_effect_sd = get_or<double>(p, "fixed_effect_sd", b.fixed_effect_sd);
  b.validate();
  return b;
}

sae::GpPriors gp_priors(const Context& ctx) {
  const json& p = ctx.section("priors");
  sae::GpPriors g;
  g.sigma_U = get_or<double>(p, "sd_U", g.sigma_U);
  g.sigma_alpha = get_or<double>(p, "sd_alpha", g.sigma_alpha);
  g.range_rho0 = get_or<double>(p, "range_rho0", g.range_rho0);
  g.range_alpha = get_or<double>(p, "range_alpha", g.range_alpha);
  g.nugget_U = get_or<double>(p, "nugget_U", g.nugget_U);
  g.nugget_alpha = get_or<double>(p, "nugget_alpha", g.nugget_alpha);
  g.smoothness = get_or<double>(p, "smoothness", g.smoothness);
  g.fixed_effect_sd = get_or<double>(p, "fixed_effect_sd", g.fixed_effect_sd);
  if (p.contains("fixed_range") && !p["fixed_range"].is_null()) g.fixed_range = p["fixed_range"].get<double>();
  if (p.contains("fixed_nugget") && !p["fixed_nugget"].is_null()) g.fixed_nugget = p["fixed_nugget"].get<double>();
  return g;
}

sae::SpatialStructure adjacency(const Context& ctx) { return sae::build_adjacency(sae::read_adjacency_file(ctx.input("adjacency"))); }

std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (v.is_null()) return {};
  if (!v.is_array()) throw sae::ValidationError(where + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(e.get<std::string>());
  return out;
}

// Area covariates in structure order (no intercept column).
Eigen::MatrixXd area_covariates(const Context& ctx, const sae::SpatialStructure& g, const std::vector<std::string>& names) {
  if (names.empty()) return Eigen::MatrixXd(static_cast<Eigen::Index>(g.size()), 0);
  const auto table = sae::read_keyed_covariates(ctx.input("covariates"), "area_id", names);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(names.size()));
  std::string missing;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto r = table.row_of(g.nodes()[i]);
    if (r < 0) {
      missing += (missing.empty() ? "" : ", ") + g.nodes()[i];
      continue;
    }
    X.row(static_cast<Eigen::Index>(i)) = table.values.row(r);
  }
  if (!missing.empty()) throw sae::ValidationError("covariates missing for area(s): " + missing);
  return X;
}

sae::DirectVariance direct_variance(const json& d) {
  const std::string v = get_or<std::string>(d, "variance", "jackknife");
  if (v == "jackknife") return sae::DirectVariance::jackknife;
  if (v == "binomial") return sae::DirectVariance::binomial;
  throw sae::ValidationError("direct.variance must be \"jackknife\" or \"binomial\"");
}

// z with Pr(Z > z) = tail, by bisection.
double normal_upper_quantile(double tail) {
  double lo = -40.0;
  double hi = 40.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---- outputs ---------------------------------------------------------------

void write_estimates(const fs::path& path, const std::vector<std::string>& ids,
                     const std::vector<std::optional<sae::Summary>>& rows, const std::string& tag) {
  sae::csv::Writer w(path, {"area_id", "estimate", "sd", "ci_low", "ci_high", "model_tag"});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    w.cell(ids[i]);
    if (rows[i]) {
      w.cell(rows[i]->median).cell(rows[i]->sd).cell(rows[i]->lower).cell(rows[i]->upper);
    } else {
      w.cell("").cell("").cell("").cell("");
    }
    w.cell(tag).end_row();
  }
}

void write_prevalence_draws(const fs::path& path, const std::vector<std::string>& ids, const Eigen::MatrixXd& draws) {
  std::vector<std::string> header = {"draw"};
  header.insert(header.end(), ids.begin(), ids.end());
  sae::csv::Writer w(path, header);
  for (Eigen::Index r = 0; r < draws.rows(); ++r) {
    w.cell(static_cast<std::int64_t>(r));
    for (Eigen::Index j = 0; j < draws.cols(); ++j) w.cell(draws(r, j));
    w.end_row();
  }
}

bool is_area_latent(const std::string& name) {
  for (const char* p : {"u[", "s[", "zS[", "zE["}) {
    if (name.rfind(p, 0) == 0) return true;
  }
  return false;
}

void record_fit(const Context& ctx, RunRecord& rec, const sae::PosteriorFit& post, const sae::AreaModelFit* fit) {
  std::vector<std::size_t> global;
  json rhat = json::object();
  for (std::size_t j = 0; j < post.names.size(); ++j) {
    if (is_area_latent(post.names[j])) continue;
    global.push_back(j);
    rhat[post.names[j]] = std::isnan(post.rhat[j]) ? json(nullptr) : json(post.rhat[j]);
  }
  sae::write_draws_csv(post, ctx.out / "posterior.csv", global);
  rec.output("posterior.csv");
  const double max_rhat = post.max_rhat();
  rec.diagnostics["max_rhat"] = max_rhat;
  rec.diagnostics["rhat"] = rhat;
  rec.diagnostics["draws"] = post.total_draws();
  json acc = json::object();
  for (std::size_t b = 0; b < post.block_names.size(); ++b) {
    if (is_area_latent(post.block_names[b])) continue;
    double a = 0.0;
    for (const auto& chain : post.acceptance) a += chain[b];
    a /= static_cast<double>(post.acceptance.size());
    if (std::isfinite(a)) acc[post.block_names[b]] = a;
  }
  rec.diagnostics["acceptance"] = acc;
  rec.diagnostics["converged"] = max_rhat <= 1.1;
  if (!(max_rhat <= 1.1)) {
    rec.warn("max r-hat " + sae::csv::format(max_rhat) + " exceeds 1.1; run longer chains");
  }
  if (fit != nullptr) {
    rec.diagnostics["used_areas"] = fit->used_areas.size();
    rec.diagnostics["dropped_areas"] = fit->dropped_areas;
  }
}

void emit_area_fit(const Context& ctx, RunRecord& rec, const sae::AreaModelFit& fit, const std::string& tag) {
  const auto s = sae::posterior_prevalence(fit.prevalence);
  std::vector<std::optional<sae::Summary>> rows(s.begin(), s.end());
  write_estimates(ctx.out / "estimates.csv", fit.area_ids, rows, tag);
  write_prevalence_draws(ctx.out / "prevalence_draws.csv", fit.area_ids, fit.prevalence);
  rec.output("estimates.csv");
  rec.output("prevalence_draws.csv");
  record_fit(ctx, rec, fit.posterior, &fit);
  rec.diagnostics["model_tag"] = tag;
}

sae::FinitePopulation load_population(const Context& ctx, const sae::SamplingFrame& frame) {
  std::vector<std::string> order;
  if (ctx.optional_input("adjacency")) order = adjacency(ctx).nodes();
  return sae::read_population_csv(frame, ctx.input("population"), order);
}

// ---- model specs shared by smooth, unit and assess --------------------------

struct UnitModel {
  sae::BetaBinomialSpec spec;
  std::string tag;
};

std::string unit_tag(bool urban, bool covariates) {
  if (urban) return covariates ? "unit_urban_cov" : "unit_urban";
  return covariates ? "unit_cov" : "unit_none";
}

std::vector<double> urban_fractions(const Context& ctx, const sae::SpatialStructure& g, bool required) {
  if (auto p = ctx.optional_input("urban_fractions")) return sae::urban_fractions_for(g, sae::read_urban_fractions(*p));
  if (auto p = ctx.optional_input("frame")) return sae::urban_fractions_for(g, sae::frame_urban_fractions(sae::read_frame_csv(*p)));
  if (required) throw sae::ValidationError("the urban model needs inputs.urban_fractions or inputs.frame");
  return std::vector<double>(g.size(), 0.0);
}

UnitModel unit_model(const Context& ctx, const sae::SpatialStructure& g, const sae::SurveySample& sample,
                     const json& model) {
  UnitModel u;
  u.spec.structure = g;
  u.spec.data = sae::cluster_data_from_sample(sample);
  u.spec.urban_effect = get_or<bool>(model, "urban_effect", true);
  u.spec.covariate_names = string_list(model.value("covariates", json(nullptr)), "model.covariates");
  u.spec.covariates = area_covariates(ctx, g, u.spec.covariate_names);
  u.spec.urban_fractions = urban_fractions(ctx, g, u.spec.urban_effect);
  u.spec.priors = bym2_priors(ctx);
  u.spec.overdispersion = get_or<bool>(model, "overdispersion", true);
  const std::string lp = get_or<std::string>(model, "lambda_prior", "pc");
  if (lp == "pc") {
    u.spec.lambda_prior = sae::LambdaPrior::pc_sqrt;
  } else if (lp == "uniform") {
    u.spec.lambda_prior = sae::LambdaPrior::uniform;
  } else {
    throw sae::ValidationError("model.lambda_prior must be \"pc\" or \"uniform\"");
  }
  u.spec.lambda_U = get_or<double>(model, "lambda_U", u.spec.lambda_U);
  u.spec.lambda_alpha = get_or<double>(model, "lambda_alpha", u.spec.lambda_alpha);
  u.spec.mcmc = chain_config(ctx);
  u.tag = unit_tag(u.spec.urban_effect, !u.spec.covariate_names.empty());
  return u;
}

sae::AreaDirectEstimates direct_for(const Context& ctx, const sae::SpatialStructure& g) {
  if (auto p = ctx.optional_input("direct")) return sae::read_direct_csv(*p);
  const auto sample = sae::read_sample_csv(ctx.input("sample"));
  return sae::direct_by_area(sample, g.nodes(), direct_variance(ctx.section("direct")));
}

void check_model_keys(const json& m) {
  check_keys(m, "model",
             {"spatial", "urban_effect", "covariates", "overdispersion", "lambda_prior", "lambda_U", "lambda_alpha"});
}

}  // namespace

// ---- subcommands -------------------------------------------------------------

void cmd_simulate(const Context& ctx) {
  RunRecord rec;
  sae::SpatialStructure g;
  if (ctx.optional_input("adjacency")) {
    g = adjacency(ctx);
  } else {
    const json& sg = ctx.section("synthetic_graph");
    if (sg.empty()) throw sae::ValidationError("simulate needs inputs.adjacency or a synthetic_graph section");
    check_keys(sg, "synthetic_graph", {"rows", "cols", "removal_probability"});
    g = sae::random_planar_graph(get_or<std::size_t>(sg, "rows", 3), get_or<std::size_t>(sg, "cols", 9),
                                 stream(ctx, Stream::graph), get_or<double>(sg, "removal_probability", 0.2));
    sae::write_adjacency_file(g, ctx.out / "adjacency.txt");
    rec.output("adjacency.txt");
  }
  sae::SamplingFrame frame;
  if (ctx.optional_input("frame")) {
    frame = sae::read_frame_csv(ctx.input("frame"));
  } else {
    const json& sf = ctx.section("synthetic_frame");
    if (sf.empty()) throw sae::ValidationError("simulate needs inputs.frame or a synthetic_frame section");
    check_keys(sf, "synthetic_frame",
               {"urban_clusters_per_area", "rural_clusters_per_area", "min_households", "max_households", "grid_cols"});
    sae::SyntheticFrameSpec spec;
    spec.areas = g.nodes();
    spec.urban_clusters_per_area = get_or<std::size_t>(sf, "urban_clusters_per_area", spec.urban_clusters_per_area);
    spec.rural_clusters_per_area = get_or<std::size_t>(sf, "rural_clusters_per_area", spec.rural_clusters_per_area);
    spec.min_households = get_or<std::int64_t>(sf, "min_households", spec.min_households);
    spec.max_households = get_or<std::int64_t>(sf, "max_households", spec.max_households);
    spec.grid_cols = get_or<std::size_t>(sf, "grid_cols", spec.grid_cols);
    spec.seed = stream(ctx, Stream::frame);
    frame = sae::synthesize_frame(spec);
    sae::write_frame_csv(frame, ctx.out / "frame.csv");
    rec.output("frame.csv");
  }
  const json& p = ctx.section("population");
  check_keys(p, "population",
             {"intercept", "urban_log_odds", "area_effect_sd", "spatial_proportion", "cluster_effect_sd",
              "covariate_effects", "persons_per_household"});
  sae::PopulationConfig cfg;
  cfg.areas = g.size();
  cfg.adjacency = g;
  cfg.intercept = get_or<double>(p, "intercept", sae::logit(0.06));
  cfg.urban_log_odds = get_or<double>(p, "urban_log_odds", 0.0);
  cfg.area_effect_sd = get_or<double>(p, "area_effect_sd", 0.4);
  cfg.spatial_proportion = get_or<double>(p, "spatial_proportion", 0.6);
  cfg.cluster_effect_sd = get_or<double>(p, "cluster_effect_sd", 0.2);
  cfg.covariate_effects = get_or<std::vector<double>>(p, "covariate_effects", {});
  cfg.persons_per_household = get_or<int>(p, "persons_per_household", 1);
  cfg.seed = stream(ctx, Stream::population);
  const auto pop = sae::generate_population(frame, cfg);
  sae::write_population_csv(pop, ctx.out / "population.csv");
  sae::write_truth_csv(pop, ctx.out / "truth.csv");
  rec.output("population.csv");
  rec.output("truth.csv");
  if (!cfg.covariate_effects.empty()) {
    sae::csv::Writer w(ctx.out / "covariates.csv", [&] {
      std::vector<std::string> h = {"area_id"};
      for (std::size_t k = 0; k < cfg.covariate_effects.size(); ++k) h.push_back("x" + std::to_string(k + 1));
      return h;
    }());
    for (std::size_t i = 0; i < pop.area_ids().size(); ++i) {
      w.cell(pop.area_ids()[i]);
      for (Eigen::Index k = 0; k < pop.area_covariates().cols(); ++k) w.cell(pop.area_covariates()(static_cast<Eigen::Index>(i), k));
      w.end_row();
    }
    rec.output("covariates.csv");
  }
  rec.diagnostics["areas"] = g.size();
  rec.diagnostics["clusters"] = frame.clusters().size();
  rec.write(ctx);
}

void cmd_sample(const Context& ctx) {
  RunRecord rec;
  const auto frame = sae::read_frame_csv(ctx.input("frame"));
  const auto pop = load_population(ctx, frame);
  const json& d = ctx.section("design");
  check_keys(d, "design",
             {"clusters_per_stratum", "urban_clusters", "rural_clusters", "households_per_cluster", "response_rates",
              "integer_start", "randomize_order"});
  sae::TwoStageDesign design;
  if (d.contains("urban_clusters") || d.contains("rural_clusters")) {
    for (const auto& s : frame.strata()) {
      design.clusters_per_stratum[s.id] = get_or<std::int64_t>(d, s.urban ? "urban_clusters" : "rural_clusters", 1);
    }
  }
  if (d.contains("clusters_per_stratum")) {
    for (const auto& [id, n] : d["clusters_per_stratum"].items()) design.clusters_per_stratum[id] = n.get<std::int64_t>();
  }
  design.households_per_cluster = get_or<std::int64_t>(d, "households_per_cluster", design.households_per_cluster);
  if (d.contains("response_rates")) {
    for (const auto& [id, r] : d["response_rates"].items()) design.response_rates[id] = r.get<double>();
  }
  design.integer_start = get_or<bool>(d, "integer_start", false);
  design.randomize_order = get_or<bool>(d, "randomize_order", false);
  design.seed = stream(ctx, Stream::design);
  const auto sample = sae::draw_two_stage(pop, design);
  sae::write_sample_csv(sample, ctx.out / "sample.csv");
  rec.output("sample.csv");

  std::map<std::string, std::vector<double>> by_stratum;
  for (const auto& r : sample.rows) by_stratum[r.stratum_id].push_back(r.adjusted_weight);
  sae::csv::Writer w(ctx.out / "weights.csv", {"stratum_id", "clusters", "cv", "deff"});
  for (const auto& [id, ws] : by_stratum) {
    w.cell(id).cell(ws.size());
    if (ws.size() >= 2) {
      const auto v = sae::weight_cv_deff(ws);
      w.cell(v.cv).cell(v.deff);
    } else {
      w.cell("").cell("");
    }
    w.end_row();
  }
  rec.output("weights.csv");
  std::vector<double> all;
  for (const auto& r : sample.rows) all.insert(all.end(), static_cast<std::size_t>(r.n_tested), r.adjusted_weight);
  if (all.size() >= 2) rec.diagnostics["person_weight_deff"] = sae::weight_cv_deff(all).deff;
  rec.diagnostics["clusters"] = sample.rows.size();
  rec.write(ctx);
}

void cmd_direct(const Context& ctx) {
  RunRecord rec;
  const json& d = ctx.section("direct");
  check_keys(d, "direct", {"variance", "pooled", "label", "level"});
  const auto method = direct_variance(d);
  const double level = get_or<double>(d, "level", 0.9);
  if (!(level > 0.0 && level < 1.0)) throw sae::ValidationError("direct.level must be in (0, 1)");
  const auto sample = sae::read_sample_csv(ctx.input("sample"));
  std::vector<std::string> order;
  if (ctx.optional_input("adjacency")) order = adjacency(ctx).nodes();
  auto est = sae::direct_by_area(sample, order, method);
  if (get_or<bool>(d, "pooled", false)) est.areas.push_back(sae::direct_pooled(sample, get_or<std::string>(d, "label", "national"), method));
  sae::write_direct_csv(est, ctx.out / "direct.csv");
  rec.output("direct.csv");

  // Normal interval on the logit scale, mapped back.
  const double zq = normal_upper_quantile(0.5 * (1.0 - level));
  std::vector<std::string> ids;
  std::vector<std::optional<sae::Summary>> rows;
  for (const auto& a : est.areas) {
    ids.push_back(a.area_id);
    if (!a.est) {
      rows.emplace_back();
      continue;
    }
    sae::Summary s;
    s.median = *a.est;
    s.mean = *a.est;
    s.sd = a.var ? std::sqrt(*a.var) : std::nan("");
    if (a.logit_est && a.logit_var) {
      s.lower = sae::expit(*a.logit_est - zq * std::sqrt(*a.logit_var));
      s.upper = sae::expit(*a.logit_est + zq * std::sqrt(*a.logit_var));
    } else {
      s.lower = std::nan("");
      s.upper = std::nan("");
    }
    rows.push_back(s);
  }
  write_estimates(ctx.out / "estimates.csv", ids, rows, "direct");
  rec.output("estimates.csv");
  std::size_t flagged = 0;
  for (const auto& a : est.areas) flagged += a.usable() ? 0 : 1;
  rec.diagnostics["areas"] = est.areas.size();
  rec.diagnostics["areas_without_logit_estimate"] = flagged;
  rec.write(ctx);
}

void cmd_smooth(const Context& ctx) {
  RunRecord rec;
  const json& model = ctx.section("model");
  check_model_keys(model);
  sae::SmoothedDirectSpec spec;
  spec.priors = bym2_priors(ctx);
  spec.mcmc = chain_config(ctx);
  const auto g = adjacency(ctx);
  spec.structure = g;
  spec.data = direct_for(ctx, g);
  spec.covariate_names = string_list(model.value("covariates", json(nullptr)), "model.covariates");
  spec.covariates = area_covariates(ctx, g, spec.covariate_names);
  const auto fit = sae::fit_smoothed_direct(spec);
  emit_area_fit(ctx, rec, fit, spec.covariate_names.empty() ? "smoothed_direct" : "smoothed_direct_cov");
  rec.write(ctx);
}

void cmd_unit(const Context& ctx) {
  RunRecord rec;
  const json& model = ctx.section("model");
  check_model_keys(model);
  chain_config(ctx);
  bym2_priors(ctx);
  const auto sample = sae::read_sample_csv(ctx.input("sample"));
  const std::string spatial = get_or<std::string>(model, "spatial", "bym2");
  if (spatial == "bym2") {
    const auto g = adjacency(ctx);
    const UnitModel u = unit_model(ctx, g, sample, model);
    const auto fit = sae::fit_betabinomial(u.spec);
    emit_area_fit(ctx, rec, fit, u.tag);
  } else if (spatial == "gp") {
    sae::GpUnitSpec spec;
    spec.data = sae::cluster_data_from_sample(sample);
    spec.urban_effect = get_or<bool>(model, "urban_effect", true);
    spec.overdispersion = get_or<bool>(model, "overdispersion", false);
    spec.lambda_U = get_or<double>(model, "lambda_U", spec.lambda_U);
    spec.lambda_alpha = get_or<double>(model, "lambda_alpha", spec.lambda_alpha);
    spec.priors = gp_priors(ctx);
    spec.mcmc = chain_config(ctx);
    const auto grid = sae::read_pixel_csv(ctx.input("pixels"));
    std::vector<std::string> areas;
    if (ctx.optional_input("adjacency")) {
      areas = adjacency(ctx).nodes();
    } else {
      for (const auto& px : grid) {
        if (std::find(areas.begin(), areas.end(), px.area_id) == areas.end()) areas.push_back(px.area_id);
      }
    }
    const auto fit = sae::fit_gp_unit(spec);
    const Eigen::MatrixXd prev = sae::aggregate_continuous(fit, grid, areas, stream(ctx, Stream::aggregation));
    std::vector<std::optional<sae::Summary>> rows;
    for (const auto& s : sae::posterior_prevalence(prev)) rows.emplace_back(s);
    const std::string tag = spec.urban_effect ? "unit_gp_urban" : "unit_gp";
    write_estimates(ctx.out / "estimates.csv", areas, rows, tag);
    write_prevalence_draws(ctx.out / "prevalence_draws.csv", areas, prev);
    rec.output("estimates.csv");
    rec.output("prevalence_draws.csv");
    record_fit(ctx, rec, fit.posterior, nullptr);
    rec.diagnostics["model_tag"] = tag;
  } else {
    throw sae::ValidationError("model.spatial must be \"bym2\" or \"gp\"");
  }
  rec.write(ctx);
}

void cmd_assess(const Context& ctx) {
  RunRecord rec;
  const json& a = ctx.section("assess");
  check_keys(a, "assess", {"model", "level", "areas"});
  const json& model = ctx.section("model");
  check_model_keys(model);
  const std::string tag = get_or<std::string>(a, "model", "smoothed_direct");
  const auto g = adjacency(ctx);
  const auto sample = sae::read_sample_csv(ctx.input("sample"));
  const auto direct = sae::direct_by_area(sample, g.nodes(), direct_variance(ctx.section("direct")));
  sae::LooOptions opt;
  opt.level = get_or<double>(a, "level", 0.9);
  opt.seed = stream(ctx, Stream::loo);
  opt.areas = string_list(a.value("areas", json(nullptr)), "assess.areas");
  sae::CvReport report;
  if (tag == "smoothed_direct" || tag == "smoothed_direct_cov") {
    sae::SmoothedDirectSpec spec;
    spec.structure = g;
    spec.data = direct;
    if (tag == "smoothed_direct_cov") {
      spec.covariate_names = string_list(model.value("covariates", json(nullptr)), "model.covariates");
      if (spec.covariate_names.empty()) throw sae::ValidationError("smoothed_direct_cov needs model.covariates");
    }
    spec.covariates = area_covariates(ctx, g, spec.covariate_names);
    spec.priors = bym2_priors(ctx);
    spec.mcmc = chain_config(ctx);
    report = sae::loo_area_cv(spec, direct, opt);
  } else if (tag == "unit_none" || tag == "unit_urban" || tag == "unit_urban_cov") {
    json m = model;
    m["urban_effect"] = tag != "unit_none";
    if (tag != "unit_urban_cov") m["covariates"] = json::array();
    if (tag == "unit_urban_cov" && string_list(m.value("covariates", json(nullptr)), "model.covariates").empty()) {
      throw sae::ValidationError("unit_urban_cov needs model.covariates");
    }
    report = sae::loo_area_cv(unit_model(ctx, g, sample, m).spec, direct, opt);
  } else {
    throw sae::ValidationError("assess.model must be one of smoothed_direct, smoothed_direct_cov, unit_none, "
                               "unit_urban, unit_urban_cov");
  }
  sae::write_cv_csv(ctx.out / "cv.csv", report);
  rec.output("cv.csv");
  rec.diagnostics["model_tag"] = tag;
  rec.diagnostics["areas_compared"] = report.records.size();
  rec.diagnostics["coverage"] = report.records.empty() ? json(nullptr) : json(report.coverage());
  rec.diagnostics["mean_discrepancy"] = report.records.empty() ? json(nullptr) : json(report.mean_discrepancy());
  rec.diagnostics["excluded"] = report.excluded;
  rec.diagnostics["failures"] = report.failures;
  for (const auto& f : report.failures) rec.warn("refit failed for " + f);
  rec.write(ctx);
}

void cmd_rank(const Context& ctx) {
  RunRecord rec;
  const json& r = ctx.section("rank");
  check_keys(r, "rank", {"level"});
  const auto table = sae::csv::read(ctx.input("draws"));
  std::vector<std::string> ids;
  for (const auto& h : table.header()) {
    if (h != "draw") ids.push_back(h);
  }
  if (ids.empty() || table.rows() == 0) throw sae::ValidationError("draws file has no area columns or no rows");
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(table.rows()), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < table.rows(); ++i) {
    for (std::size_t j = 0; j < ids.size(); ++j) draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.number(i, ids[j]);
  }
  const auto ranks = sae::rank_areas(draws, ids, get_or<double>(r, "level", 0.9));
  sae::write_rank_csv(ctx.out / "ranks.csv", ranks);
  rec.output("ranks.csv");
  rec.diagnostics["areas"] = ids.size();
  rec.diagnostics["draws"] = table.rows();
  rec.write(ctx);
}

}  // namespace cli
