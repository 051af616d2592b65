#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ovmix/datagen.hpp"
#include "ovmix/eval.hpp"
#include "ovmix/trainer.hpp"

namespace ovmix {

// One experiment: benchmark layout, training hyper-parameters, and the fusion
// operating point, all keyed by a single seed.
struct RunConfig {
    std::string name = "default";
    // Experiment seed. Every stage derives its own stream from it; data.seed
    // and train.seed can still be pinned individually through their keys.
    std::uint64_t seed = 7;
    std::filesystem::path out_dir;  // set by the caller (--out), not a config key
    SyntheticSpec data;
    TrainConfig train;
    FusionParams fusion;
};

void validate(const RunConfig& cfg);  // ConfigError / SpecError

// Sets one entry from its text form ("seed" -> "9", "loss.proxy_variant" ->
// "l2"). The flat dotted keys are the config-file vocabulary; the CLI flags
// funnel through the same function so overrides behave identically. "seed"
// sets the experiment seed plus data.seed and train.seed together. Unknown
// keys or unparsable values throw ConfigError.
void set_config_entry(RunConfig& cfg, const std::string& key, const std::string& text);

// Loads a flat JSON object of dotted keys, e.g.
//   {"seed": 9, "data.n_base": 16, "loss.proxy_variant": "cosine"}.
// Values may be numbers, booleans, or strings; each is routed through
// set_config_entry. Keys are applied in the file's (sorted) key order.
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical flat-JSON rendering of the effective config: fixed key order,
// 17-significant-digit doubles. Identical configs produce identical bytes;
// out_dir is deliberately excluded so the hash names the experiment, not its
// location.
std::string canonical_dump(const RunConfig& cfg);

// fnv1a64 of canonical_dump as 16 lowercase hex digits; stamped into every
// CSV header the commands emit.
std::string config_hash_hex(const RunConfig& cfg);

}  // namespace ovmix
