#pragma once

// Canonical JSON records for the core value types plus atomic file
// output.  Records carry a schema version and a kind tag; writers emit
// keys in a fixed order so identical inputs produce identical bytes.

#include <cstdint>
#include <string>

#include "rost/cascade.hpp"
#include "rost/overlap.hpp"
#include "rost/partition.hpp"

namespace rost {

std::string mass_partition_to_json(const MassPartition& p);
MassPartition mass_partition_from_json(const std::string& text);

std::string rost_to_json(const Rost& r);
Rost rost_from_json(const std::string& text);

std::string structure_to_json(const LevelStructure& s);
LevelStructure structure_from_json(const std::string& text);

// Writes to a temporary sibling and renames over the target.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace rost
