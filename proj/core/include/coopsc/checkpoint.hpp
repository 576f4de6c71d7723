#ifndef COOPSC_CHECKPOINT_HPP
#define COOPSC_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "coopsc/codec.hpp"

namespace coopsc::codec {

// Configuration stamp embedded in every checkpoint; loads verify it.
struct CheckpointStamp {
  int F = 0, B = 0, N = 0, M = 0, S = 0;
  std::string backbone_arch;

  bool operator==(const CheckpointStamp& o) const = default;
};

CheckpointStamp stamp_of(const SystemConfig& cfg);

// Binary archive: magic, JSON directory (stamp + tensor names/shapes), then
// raw little-endian doubles. Entries are written in the given order.
void save_checkpoint(const std::string& path, const std::vector<nn::ParamEntry>& entries,
                     const CheckpointStamp& stamp);

// Copies tensors by name into the given entries. Throws DependencyError if
// the file is missing or lacks a requested tensor, ConfigError on stamp or
// shape mismatch.
void load_checkpoint(const std::string& path, const std::vector<nn::ParamEntry>& entries,
                     const CheckpointStamp& expected);

bool checkpoint_exists(const std::string& path);

}  // namespace coopsc::codec

#endif
