#pragma once

#include "context.hpp"

namespace cli {

void cmd_simulate(const Context& ctx);
void cmd_sample(const Context& ctx);
void cmd_direct(const Context& ctx);
void cmd_smooth(const Context& ctx);
void cmd_unit(const Context& ctx);
void cmd_assess(const Context& ctx);
void cmd_rank(const Context& ctx);

}  // namespace cli
