#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ovmix/embedding.hpp"

namespace ovmix {

enum class ClassGroup { base, novel, proxy };

std::string to_string(ClassGroup g);
ClassGroup class_group_from_string(const std::string& s);  // SchemaError

// A named class with its text-side embedding. Proxy records are synthetic and
// never serialized; registry files only carry base and novel groups.
struct ClassRecord {
    int id = 0;
    std::string name;
    ClassGroup group = ClassGroup::base;
    Embedding text_embedding;  // unit norm
};

// Immutable after construction. Ids are unique; every embedding has the
// registry dimension; the classifier matrix view has one unit row per record.
class ClassRegistry {
public:
    ClassRegistry(Eigen::Index dimension, std::vector<ClassRecord> records);

    Eigen::Index dimension() const { return dimension_; }
    const std::vector<ClassRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    const ClassRecord& by_id(int id) const;     // UnknownClass
    std::size_t index_of(int id) const;         // row in classifier matrix; UnknownClass
    bool contains(int id) const;

    std::vector<int> ids_of(ClassGroup g) const;
    std::size_t count_of(ClassGroup g) const;

    // records().size() x dimension(); row k is records()[k].text_embedding.
    const Eigen::MatrixXd& classifier_matrix() const { return classifier_; }

private:
    Eigen::Index dimension_;
    std::vector<ClassRecord> records_;
    Eigen::MatrixXd classifier_;
};

struct RegistryLoadResult {
    ClassRegistry registry;
    // Number of stored embeddings whose norm was off unit by more than the
    // flag tolerance and had to be renormalized on load.
    std::size_t renormalized = 0;
};

// JSON interchange format:
//   {"dimension": int, "classes": [{"id", "name", "group", "embedding"}, ...]}
// Doubles are written with 17 significant digits, so save/load round-trips
// finite values bit-exactly. Loading normalizes off-unit embeddings and
// counts them. Throws SchemaError on malformed input, IoError on I/O failure.
RegistryLoadResult load_registry(const std::filesystem::path& path);
void save_registry(const ClassRegistry& registry, const std::filesystem::path& path);

}  // namespace ovmix
