#include "ovmix/config.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

#include "jsonfmt.hpp"
#include "ovmix/error.hpp"
#include "ovmix/rng.hpp"

namespace ovmix {

namespace {

double parse_double(const std::string& text, const std::string& key) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw ConfigError("key \"" + key + "\": expected a finite number, got \"" + text + "\"");
    }
    return v;
}

long long parse_integer(const std::string& text, const std::string& key) {
    char* end = nullptr;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0') {
        throw ConfigError("key \"" + key + "\": expected an integer, got \"" + text + "\"");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& key) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || text.front() == '-') {
        throw ConfigError("key \"" + key + "\": expected an unsigned integer, got \"" + text +
                          "\"");
    }
    return v;
}

int parse_int(const std::string& text, const std::string& key) {
    const long long v = parse_integer(text, key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError("key \"" + key + "\": integer out of range");
    }
    return static_cast<int>(v);
}

bool parse_bool(const std::string& text, const std::string& key) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("key \"" + key + "\": expected true/false, got \"" + text + "\"");
}

}  // namespace

void validate(const RunConfig& cfg) {
    if (cfg.name.empty()) throw ConfigError("name must be nonempty");
    validate(cfg.data);
    validate(cfg.train);
    validate(cfg.fusion);
}

void set_config_entry(RunConfig& cfg, const std::string& key, const std::string& text) {
    if (key == "name") {
        cfg.name = text;
    } else if (key == "seed") {
        cfg.seed = parse_u64(text, key);
        cfg.data.seed = cfg.seed;
        cfg.train.seed = cfg.seed;
    } else if (key == "data.seed") {
        cfg.data.seed = parse_u64(text, key);
    } else if (key == "data.embedding_dim") {
        cfg.data.embedding_dim = parse_int(text, key);
    } else if (key == "data.feature_dim") {
        cfg.data.feature_dim = parse_int(text, key);
    } else if (key == "data.n_base") {
        cfg.data.n_base = parse_int(text, key);
    } else if (key == "data.n_novel") {
        cfg.data.n_novel = parse_int(text, key);
    } else if (key == "data.novel_mode") {
        cfg.data.novel_mode = novel_mode_from_string(text);
    } else if (key == "data.samples_per_class") {
        cfg.data.samples_per_class = parse_int(text, key);
    } else if (key == "data.quality_noise_coupling") {
        cfg.data.quality_noise_coupling = parse_double(text, key);
    } else if (key == "data.hull_sigma") {
        cfg.data.hull_sigma = parse_double(text, key);
    } else if (key == "train.seed") {
        cfg.train.seed = parse_u64(text, key);
    } else if (key == "train.epochs") {
        cfg.train.epochs = parse_int(text, key);
    } else if (key == "train.batch_size") {
        cfg.train.batch_size = parse_int(text, key);
    } else if (key == "train.learning_rate") {
        cfg.train.learning_rate = parse_double(text, key);
    } else if (key == "train.weight_decay") {
        cfg.train.weight_decay = parse_double(text, key);
    } else if (key == "train.grad_clip") {
        cfg.train.grad_clip = parse_double(text, key);
    } else if (key == "train.proxy_only") {
        cfg.train.proxy_only = parse_bool(text, key);
    } else if (key == "train.teacher_sigma") {
        cfg.train.teacher_sigma = parse_double(text, key);
    } else if (key == "mix.sampler") {
        cfg.train.mix.sampler = lambda_sampler_from_string(text);
    } else if (key == "mix.pair_strategy") {
        cfg.train.mix.pair_strategy = pair_strategy_from_string(text);
    } else if (key == "mix.pairs_per_batch") {
        cfg.train.mix.pairs_per_batch = parse_int(text, key);
    } else if (key == "mix.granularity") {
        cfg.train.mix.granularity = granularity_from_string(text);
    } else if (key == "weighting.mode") {
        cfg.train.weighting.mode = weighting_mode_from_string(text);
    } else if (key == "weighting.temperature") {
        cfg.train.weighting.temperature = parse_double(text, key);
    } else if (key == "loss.proxy_variant") {
        cfg.train.loss.proxy_variant = proxy_variant_from_string(text);
    } else if (key == "loss.proxy_weight") {
        cfg.train.loss.proxy_weight = parse_double(text, key);
    } else if (key == "loss.bce_logit_scale") {
        cfg.train.loss.bce_logit_scale = parse_double(text, key);
    } else if (key == "loss.distill_weight") {
        cfg.train.loss.distill_weight = parse_double(text, key);
    } else if (key == "fusion.alpha") {
        cfg.fusion.alpha = parse_double(text, key);
    } else if (key == "fusion.beta") {
        cfg.fusion.beta = parse_double(text, key);
    } else if (key == "fusion.positivity") {
        cfg.fusion.positivity = positivity_from_string(text);
    } else {
        throw ConfigError("unknown config key \"" + key + "\"");
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    if (!j.is_object()) {
        throw ConfigError("config must be a flat JSON object: " + path.string());
    }
    RunConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const nlohmann::json& v = it.value();
        if (v.is_object() || v.is_array() || v.is_null()) {
            throw ConfigError("key \"" + it.key() + "\": values must be scalars");
        }
        set_config_entry(cfg, it.key(), v.is_string() ? v.get<std::string>() : v.dump());
    }
    return cfg;
}

std::string canonical_dump(const RunConfig& cfg) {
    std::string out = "{\n";
    bool first = true;
    const auto put = [&](const char* key, const std::string& rendered) {
        if (!first) out += ",\n";
        first = false;
        out += "  \"";
        out += key;
        out += "\": ";
        out += rendered;
    };
    const auto str = [](const std::string& s) { return detail::fmt_json_string(s); };
    const auto num = [](double v) { return detail::fmt_double(v); };

    put("name", str(cfg.name));
    put("seed", std::to_string(cfg.seed));
    put("data.seed", std::to_string(cfg.data.seed));
    put("data.embedding_dim", std::to_string(cfg.data.embedding_dim));
    put("data.feature_dim", std::to_string(cfg.data.feature_dim));
    put("data.n_base", std::to_string(cfg.data.n_base));
    put("data.n_novel", std::to_string(cfg.data.n_novel));
    put("data.novel_mode", str(to_string(cfg.data.novel_mode)));
    put("data.samples_per_class", std::to_string(cfg.data.samples_per_class));
    put("data.quality_noise_coupling", num(cfg.data.quality_noise_coupling));
    put("data.hull_sigma", num(cfg.data.hull_sigma));
    put("train.seed", std::to_string(cfg.train.seed));
    put("train.epochs", std::to_string(cfg.train.epochs));
    put("train.batch_size", std::to_string(cfg.train.batch_size));
    put("train.learning_rate", num(cfg.train.learning_rate));
    put("train.weight_decay", num(cfg.train.weight_decay));
    put("train.grad_clip", num(cfg.train.grad_clip));
    put("train.proxy_only", cfg.train.proxy_only ? "true" : "false");
    put("train.teacher_sigma", num(cfg.train.teacher_sigma));
    put("mix.sampler", str(to_string(cfg.train.mix.sampler)));
    put("mix.pair_strategy", str(to_string(cfg.train.mix.pair_strategy)));
    put("mix.pairs_per_batch", std::to_string(cfg.train.mix.pairs_per_batch));
    put("mix.granularity", str(to_string(cfg.train.mix.granularity)));
    put("weighting.mode", str(to_string(cfg.train.weighting.mode)));
    put("weighting.temperature", num(cfg.train.weighting.temperature));
    put("loss.proxy_variant", str(to_string(cfg.train.loss.proxy_variant)));
    put("loss.proxy_weight", num(cfg.train.loss.proxy_weight));
    put("loss.bce_logit_scale", num(cfg.train.loss.bce_logit_scale));
    put("loss.distill_weight", num(cfg.train.loss.distill_weight));
    put("fusion.alpha", num(cfg.fusion.alpha));
    put("fusion.beta", num(cfg.fusion.beta));
    put("fusion.positivity", str(to_string(cfg.fusion.positivity)));
    out += "\n}\n";
    return out;
}

std::string config_hash_hex(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_dump(cfg))));
    return buf;
}

}  // namespace ovmix
