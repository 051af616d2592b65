#include "ovmix/registry.hpp"

#include <cmath>
#include <set>
#include <unordered_map>

#include "jsonfmt.hpp"
#include "ovmix/error.hpp"

namespace ovmix {

std::string to_string(ClassGroup g) {
    switch (g) {
        case ClassGroup::base: return "base";
        case ClassGroup::novel: return "novel";
        case ClassGroup::proxy: return "proxy";
    }
    return "?";
}

ClassGroup class_group_from_string(const std::string& s) {
    if (s == "base") return ClassGroup::base;
    if (s == "novel") return ClassGroup::novel;
    if (s == "proxy") return ClassGroup::proxy;
    throw SchemaError("unknown class group \"" + s + "\"");
}

ClassRegistry::ClassRegistry(Eigen::Index dimension, std::vector<ClassRecord> records)
    : dimension_(dimension), records_(std::move(records)) {
    if (dimension_ < 2) {
        throw SchemaError("registry dimension must be >= 2, got " + std::to_string(dimension_));
    }
    std::set<int> seen;
    for (const auto& rec : records_) {
        if (rec.id < 0) {
            throw SchemaError("class id must be >= 0, got " + std::to_string(rec.id));
        }
        if (!seen.insert(rec.id).second) {
            throw SchemaError("duplicate class id " + std::to_string(rec.id));
        }
        if (rec.text_embedding.dim() != dimension_) {
            throw SchemaError("class " + std::to_string(rec.id) + " embedding length " +
                              std::to_string(rec.text_embedding.dim()) + " != dimension " +
                              std::to_string(dimension_));
        }
        if (!rec.text_embedding.normalized()) {
            throw SchemaError("class " + std::to_string(rec.id) +
                              " text embedding is not normalized");
        }
    }
    classifier_.resize(static_cast<Eigen::Index>(records_.size()), dimension_);
    for (Eigen::Index i = 0; i < classifier_.rows(); ++i) {
        classifier_.row(i) = records_[static_cast<std::size_t>(i)].text_embedding.values();
    }
}

const ClassRecord& ClassRegistry::by_id(int id) const {
    return records_[index_of(id)];
}

std::size_t ClassRegistry::index_of(int id) const {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].id == id) return i;
    }
    throw UnknownClass("class id " + std::to_string(id) + " not in registry");
}

bool ClassRegistry::contains(int id) const {
    for (const auto& rec : records_) {
        if (rec.id == id) return true;
    }
    return false;
}

std::vector<int> ClassRegistry::ids_of(ClassGroup g) const {
    std::vector<int> out;
    for (const auto& rec : records_) {
        if (rec.group == g) out.push_back(rec.id);
    }
    return out;
}

std::size_t ClassRegistry::count_of(ClassGroup g) const {
    std::size_t n = 0;
    for (const auto& rec : records_) {
        n += rec.group == g ? 1 : 0;
    }
    return n;
}

RegistryLoadResult load_registry(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    if (!j.is_object() || !j.contains("dimension") || !j.contains("classes")) {
        throw SchemaError("registry file must be an object with \"dimension\" and \"classes\"");
    }
    if (!j["dimension"].is_number_integer()) {
        throw SchemaError("\"dimension\" must be an integer");
    }
    const Eigen::Index dim = j["dimension"].get<Eigen::Index>();
    if (!j["classes"].is_array()) {
        throw SchemaError("\"classes\" must be an array");
    }

    std::size_t renormalized = 0;
    std::vector<ClassRecord> records;
    records.reserve(j["classes"].size());
    for (const auto& jc : j["classes"]) {
        if (!jc.is_object() || !jc.contains("id") || !jc.contains("name") ||
            !jc.contains("group") || !jc.contains("embedding")) {
            throw SchemaError("class entry missing one of id/name/group/embedding");
        }
        if (!jc["id"].is_number_integer() || !jc["name"].is_string() ||
            !jc["group"].is_string() || !jc["embedding"].is_array()) {
            throw SchemaError("class entry has a field of the wrong type");
        }
        ClassRecord rec;
        rec.id = jc["id"].get<int>();
        rec.name = jc["name"].get<std::string>();
        rec.group = class_group_from_string(jc["group"].get<std::string>());
        if (rec.group == ClassGroup::proxy) {
            throw SchemaError("registry files may only carry base or novel classes");
        }

        Eigen::VectorXd v(static_cast<Eigen::Index>(jc["embedding"].size()));
        Eigen::Index k = 0;
        for (const auto& x : jc["embedding"]) {
            if (!x.is_number()) {
                throw SchemaError("embedding entries must be numbers");
            }
            v[k++] = x.get<double>();
        }
        if (!v.allFinite()) {
            throw SchemaError("class " + std::to_string(rec.id) +
                              " embedding has a non-finite entry");
        }
        if (v.size() != dim) {
            throw SchemaError("class " + std::to_string(rec.id) + " embedding length " +
                              std::to_string(v.size()) + " != dimension " + std::to_string(dim));
        }
        const double n = v.norm();
        if (n <= kNormZeroEps) {
            throw SchemaError("class " + std::to_string(rec.id) + " embedding has near-zero norm");
        }
        if (std::abs(n - 1.0) > kUnitNormTol) {
            // Stored off unit: normalize on load and count it. Values already
            // within tolerance are kept verbatim so round-trips stay bit-exact.
            rec.text_embedding = l2_normalize(v);
            ++renormalized;
        } else {
            rec.text_embedding = Embedding::unit(std::move(v));
        }
        records.push_back(std::move(rec));
    }
    return RegistryLoadResult{ClassRegistry(dim, std::move(records)), renormalized};
}

void save_registry(const ClassRegistry& registry, const std::filesystem::path& path) {
    std::string out;
    out += "{\"dimension\":";
    out += std::to_string(registry.dimension());
    out += ",\"classes\":[";
    bool first = true;
    for (const auto& rec : registry.records()) {
        if (rec.group == ClassGroup::proxy) {
            throw SchemaError("proxy classes are anonymous and cannot be serialized");
        }
        if (!first) out += ',';
        first = false;
        out += "{\"id\":";
        out += std::to_string(rec.id);
        out += ",\"name\":";
        out += detail::fmt_json_string(rec.name);
        out += ",\"group\":\"";
        out += to_string(rec.group);
        out += "\",\"embedding\":";
        detail::append_double_array(out, rec.text_embedding.values());
        out += '}';
    }
    out += "]}\n";
    detail::write_text_file(path, out);
}

}  // namespace ovmix
