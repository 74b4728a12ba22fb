#pragma once

#include <iosfwd>
#include <string>

#include "isdg/nn/params.hpp"

namespace isdg::nn {

inline constexpr const char* kCheckpointMagic = "ISDG-CHECKPOINT v1";

// Layout: the magic line, one JSON header line {"meta": ..., "dtype": "f32",
// "groups": [{"name", "rows", "cols"}]}, then every group's values as raw
// little-endian floats in header order.
void save_checkpoint(std::ostream& out, const ModelState<float>& state, const std::string& meta_json);
void save_checkpoint(const std::string& path, const ModelState<float>& state,
                     const std::string& meta_json);

struct LoadedCheckpoint {
  std::string meta_json;
};

// Fills a state whose groups were declared by the caller; names and shapes
// must match the file exactly.
LoadedCheckpoint load_checkpoint(std::istream& in, ModelState<float>& state);
LoadedCheckpoint load_checkpoint(const std::string& path, ModelState<float>& state);
// Reads only the meta object, so the caller can rebuild the model layout.
std::string read_checkpoint_meta(const std::string& path);

}  // namespace isdg::nn
