#pragma once

#include <string>

#include "avshield/victim_model.hpp"

namespace avshield {

// Self-describing JSON checkpoint: schedule/config block, training seed, and
// every parameter array with its shape. Doubles round-trip exactly.
void save_checkpoint(const VictimModel& model, const std::string& path);
VictimModel load_checkpoint(const std::string& path);

} // namespace avshield
