#include "isdg/nn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "isdg/errors.hpp"

namespace isdg::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

nlohmann::json read_header(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic) || magic != kCheckpointMagic) {
    throw ValidationError("not a checkpoint (bad magic line)");
  }
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("checkpoint header missing");
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint header is not JSON: ") + e.what());
  }
}

}  // namespace

void save_checkpoint(std::ostream& out, const ModelState<float>& state, const std::string& meta_json) {
  nlohmann::json header;
  header["meta"] = nlohmann::json::parse(meta_json);
  header["dtype"] = "f32";
  header["groups"] = nlohmann::json::array();
  for (const auto& p : state) {
    header["groups"].push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  out << kCheckpointMagic << '\n' << header.dump() << '\n';
  for (const auto& p : state) {
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

void save_checkpoint(const std::string& path, const ModelState<float>& state, const std::string& meta_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open checkpoint for writing: " + path);
  save_checkpoint(out, state, meta_json);
}

LoadedCheckpoint load_checkpoint(std::istream& in, ModelState<float>& state) {
  const nlohmann::json header = read_header(in);
  if (header.value("dtype", "") != "f32") throw ValidationError("unsupported checkpoint dtype");
  const auto& groups = header.at("groups");
  if (groups.size() != state.size()) {
    throw ValidationError("checkpoint has " + std::to_string(groups.size()) + " parameter groups, model has " +
                          std::to_string(state.size()));
  }
  for (std::size_t k = 0; k < groups.size(); ++k) {
    auto& p = state[k];
    const std::string name = groups[k].at("name");
    const int rows = groups[k].at("rows");
    const int cols = groups[k].at("cols");
    if (name != p.name || rows != p.value.rows() || cols != p.value.cols()) {
      throw ValidationError("checkpoint group " + name + shape_string(rows, cols) + " does not match model group " +
                            p.name + shape_string(p.value.rows(), p.value.cols()));
    }
  }
  for (auto& p : state) {
    in.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(float)));
    if (!in) throw ValidationError("checkpoint truncated in group " + p.name);
    p.grad = Tensor<float>(p.value.rows(), p.value.cols());
  }
  return {header.at("meta").dump()};
}

LoadedCheckpoint load_checkpoint(const std::string& path, ModelState<float>& state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  return load_checkpoint(in, state);
}

std::string read_checkpoint_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  return read_header(in).at("meta").dump();
}

}  // namespace isdg::nn
