#include "ovmix/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jsonfmt.hpp"
#include "ovmix/error.hpp"

namespace ovmix {

std::string to_string(NovelMode m) {
    switch (m) {
        case NovelMode::in_hull: return "in_hull";
        case NovelMode::off_hull: return "off_hull";
        case NovelMode::mixed: return "mixed";
    }
    return "?";
}

NovelMode novel_mode_from_string(const std::string& s) {
    if (s == "in_hull") return NovelMode::in_hull;
    if (s == "off_hull") return NovelMode::off_hull;
    if (s == "mixed") return NovelMode::mixed;
    throw SpecError("unknown novel_mode \"" + s + "\"");
}

void validate(const SyntheticSpec& spec) {
    if (spec.embedding_dim < 2) throw SpecError("embedding_dim must be >= 2");
    if (spec.feature_dim < 1) throw SpecError("feature_dim must be >= 1");
    if (spec.n_base < 2) throw SpecError("n_base must be >= 2 (mixup needs pairs)");
    if (spec.n_novel < 0) throw SpecError("n_novel must be >= 0");
    if (spec.samples_per_class < 1) throw SpecError("samples_per_class must be >= 1");
    if (spec.quality_noise_coupling < 0) throw SpecError("quality_noise_coupling must be >= 0");
    if (spec.hull_sigma < 0) throw SpecError("hull_sigma must be >= 0");
}

namespace {

Eigen::VectorXd random_unit(Eigen::Index dim, Rng& rng) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
    return l2_normalize(v).values();
}

std::string class_name(const char* prefix, int k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%02d", prefix, k);
    return buf;
}

Eigen::VectorXd in_hull_novel(const std::vector<Eigen::VectorXd>& base,
                              double sigma, Rng& rng) {
    const std::size_t i = rng.index(base.size());
    std::size_t j = rng.index(base.size() - 1);
    if (j >= i) ++j;
    const double lam = rng.uniform();
    Eigen::VectorXd v = l2_normalize(lam * base[i] + (1.0 - lam) * base[j]).values();
    if (sigma > 0.0) {
        for (Eigen::Index k = 0; k < v.size(); ++k) v[k] += sigma * rng.normal();
        v = l2_normalize(v).values();
    }
    return v;
}

void emit_samples(std::vector<RegionSample>& out, const Eigen::MatrixXd& feature_map,
                  const Eigen::VectorXd& text, int class_id, int count,
                  double coupling, Rng& rng) {
    const Eigen::VectorXd clean = feature_map * text;
    for (int s = 0; s < count; ++s) {
        RegionSample sample;
        sample.class_id = class_id;
        sample.iou = rng.uniform(0.25, 1.0);
        sample.objectness = std::clamp(sample.iou + rng.uniform(-0.1, 0.1), 0.0, 1.0);
        const double noise_sd = coupling * (1.0 - sample.iou);
        sample.feature = clean;
        if (noise_sd > 0.0) {
            for (Eigen::Index k = 0; k < sample.feature.size(); ++k) {
                sample.feature[k] += noise_sd * rng.normal();
            }
        }
        out.push_back(std::move(sample));
    }
}

}  // namespace

Benchmark gen_benchmark(const SyntheticSpec& spec) {
    validate(spec);
    Rng rng(derive_seed(spec.seed, "datagen"));

    // One global linear feature map shared across classes; a head must learn
    // (roughly) its pseudo-inverse.
    const double map_sd = 1.0 / std::sqrt(static_cast<double>(spec.embedding_dim));
    Eigen::MatrixXd feature_map(spec.feature_dim, spec.embedding_dim);
    for (Eigen::Index r = 0; r < feature_map.rows(); ++r) {
        for (Eigen::Index c = 0; c < feature_map.cols(); ++c) {
            feature_map(r, c) = map_sd * rng.normal();
        }
    }

    std::vector<Eigen::VectorXd> base_text;
    base_text.reserve(static_cast<std::size_t>(spec.n_base));
    for (int i = 0; i < spec.n_base; ++i) {
        base_text.push_back(random_unit(spec.embedding_dim, rng));
    }

    std::vector<Eigen::VectorXd> novel_text;
    novel_text.reserve(static_cast<std::size_t>(spec.n_novel));
    const int n_in_hull = spec.novel_mode == NovelMode::in_hull ? spec.n_novel
                        : spec.novel_mode == NovelMode::off_hull ? 0
                        : (spec.n_novel + 1) / 2;  // mixed rounds in_hull up
    for (int i = 0; i < spec.n_novel; ++i) {
        if (i < n_in_hull) {
            novel_text.push_back(in_hull_novel(base_text, spec.hull_sigma, rng));
        } else {
            novel_text.push_back(random_unit(spec.embedding_dim, rng));
        }
    }

    std::vector<ClassRecord> records;
    records.reserve(static_cast<std::size_t>(spec.n_base + spec.n_novel));
    for (int i = 0; i < spec.n_base; ++i) {
        records.push_back({i, class_name("base", i), ClassGroup::base,
                           Embedding::unit(base_text[static_cast<std::size_t>(i)])});
    }
    for (int i = 0; i < spec.n_novel; ++i) {
        records.push_back({spec.n_base + i, class_name("novel", i), ClassGroup::novel,
                           Embedding::unit(novel_text[static_cast<std::size_t>(i)])});
    }
    ClassRegistry registry(spec.embedding_dim, std::move(records));

    std::vector<RegionSample> train;
    train.reserve(static_cast<std::size_t>(spec.n_base * spec.samples_per_class));
    for (int i = 0; i < spec.n_base; ++i) {
        emit_samples(train, feature_map, base_text[static_cast<std::size_t>(i)], i,
                     spec.samples_per_class, spec.quality_noise_coupling, rng);
    }

    std::vector<RegionSample> eval;
    eval.reserve(static_cast<std::size_t>((spec.n_base + spec.n_novel) * spec.samples_per_class));
    for (const auto& rec : registry.records()) {
        emit_samples(eval, feature_map, rec.text_embedding.values(), rec.id,
                     spec.samples_per_class, spec.quality_noise_coupling, rng);
    }

    return Benchmark{std::move(registry), std::move(train), std::move(eval)};
}

std::vector<Embedding> make_teachers(const std::vector<RegionSample>& samples,
                                     const ClassRegistry& registry, double sigma, Rng& rng) {
    std::vector<Embedding> teachers;
    teachers.reserve(samples.size());
    for (const auto& s : samples) {
        Eigen::VectorXd v = registry.by_id(s.class_id).text_embedding.values();
        for (Eigen::Index k = 0; k < v.size(); ++k) v[k] += sigma * rng.normal();
        teachers.push_back(l2_normalize(v));
    }
    return teachers;
}

void save_samples(const std::vector<RegionSample>& samples, const std::filesystem::path& path) {
    const Eigen::Index dim = samples.empty() ? 0 : samples.front().feature.size();
    std::string out;
    out += "{\"feature_dim\":";
    out += std::to_string(dim);
    out += ",\"samples\":[";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.feature.size() != dim) {
            throw SchemaError("sample " + std::to_string(i) + " feature length " +
                              std::to_string(s.feature.size()) + " != feature_dim " +
                              std::to_string(dim));
        }
        if (i) out += ',';
        out += "{\"feature\":";
        detail::append_double_array(out, s.feature);
        out += ",\"class_id\":";
        out += std::to_string(s.class_id);
        out += ",\"iou\":";
        out += detail::fmt_double(s.iou);
        out += ",\"objectness\":";
        out += detail::fmt_double(s.objectness);
        out += '}';
    }
    out += "]}\n";
    detail::write_text_file(path, out);
}

std::vector<RegionSample> load_samples(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    if (!j.is_object() || !j.contains("feature_dim") || !j.contains("samples")) {
        throw SchemaError("samples file must be an object with \"feature_dim\" and \"samples\"");
    }
    if (!j["feature_dim"].is_number_integer() || !j["samples"].is_array()) {
        throw SchemaError("samples file has a field of the wrong type");
    }
    const Eigen::Index dim = j["feature_dim"].get<Eigen::Index>();

    std::vector<RegionSample> samples;
    samples.reserve(j["samples"].size());
    for (const auto& js : j["samples"]) {
        if (!js.is_object() || !js.contains("feature") || !js.contains("class_id") ||
            !js.contains("iou") || !js.contains("objectness")) {
            throw SchemaError("sample entry missing one of feature/class_id/iou/objectness");
        }
        if (!js["feature"].is_array() || !js["class_id"].is_number_integer() ||
            !js["iou"].is_number() || !js["objectness"].is_number()) {
            throw SchemaError("sample entry has a field of the wrong type");
        }
        RegionSample s;
        s.class_id = js["class_id"].get<int>();
        if (s.class_id < 0) throw SchemaError("class_id must be >= 0");
        s.iou = js["iou"].get<double>();
        s.objectness = js["objectness"].get<double>();
        if (!(s.iou >= 0.0 && s.iou <= 1.0) || !(s.objectness >= 0.0 && s.objectness <= 1.0)) {
            throw SchemaError("iou and objectness must lie in [0, 1]");
        }
        s.feature.resize(static_cast<Eigen::Index>(js["feature"].size()));
        Eigen::Index k = 0;
        for (const auto& x : js["feature"]) {
            if (!x.is_number()) throw SchemaError("feature entries must be numbers");
            s.feature[k++] = x.get<double>();
        }
        if (s.feature.size() != dim) {
            throw SchemaError("sample feature length " + std::to_string(s.feature.size()) +
                              " != feature_dim " + std::to_string(dim));
        }
        if (!s.feature.allFinite()) throw SchemaError("feature has a non-finite entry");
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace ovmix
