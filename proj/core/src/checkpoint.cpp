#include "coopsc/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "coopsc/errors.hpp"

namespace coopsc::codec {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'C', 'S', 'C', 'K', 'P', 'T', '1', '\n'};

json stamp_to_json(const CheckpointStamp& s) {
  return json{{"F", s.F}, {"B", s.B}, {"N", s.N}, {"M", s.M},
              {"S", s.S}, {"backbone_arch", s.backbone_arch}};
}

CheckpointStamp stamp_from_json(const json& j) {
  CheckpointStamp s;
  s.F = j.at("F").get<int>();
  s.B = j.at("B").get<int>();
  s.N = j.at("N").get<int>();
  s.M = j.at("M").get<int>();
  s.S = j.at("S").get<int>();
  s.backbone_arch = j.at("backbone_arch").get<std::string>();
  return s;
}
}  // namespace

CheckpointStamp stamp_of(const SystemConfig& cfg) {
  return CheckpointStamp{cfg.F, cfg.B, cfg.N, cfg.M, cfg.S, cfg.backbone.arch};
}

void save_checkpoint(const std::string& path, const std::vector<nn::ParamEntry>& entries,
                     const CheckpointStamp& stamp) {
  json dir;
  dir["stamp"] = stamp_to_json(stamp);
  json tensors = json::array();
  for (const auto& e : entries) {
    tensors.push_back(json{{"name", e.name},
                           {"rows", e.param->value.rows()},
                           {"cols", e.param->value.cols()}});
  }
  dir["tensors"] = tensors;
  const std::string header = dir.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DependencyError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& e : entries) {
    out.write(reinterpret_cast<const char*>(e.param->value.data()),
              static_cast<std::streamsize>(sizeof(double) * e.param->value.size()));
  }
  if (!out) throw DependencyError("checkpoint write failed: " + path);
}

void load_checkpoint(const std::string& path, const std::vector<nn::ParamEntry>& entries,
                     const CheckpointStamp& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing checkpoint: " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a checkpoint file: " + path);
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  json dir;
  try {
    dir = json::parse(header);
  } catch (const json::exception& e) {
    throw ParseError("corrupt checkpoint directory in " + path + ": " + e.what());
  }
  const CheckpointStamp stamp = stamp_from_json(dir.at("stamp"));
  if (!(stamp == expected)) {
    throw ConfigError("checkpoint stamp mismatch in " + path + ": file (F=" +
                      std::to_string(stamp.F) + ",B=" + std::to_string(stamp.B) +
                      ",N=" + std::to_string(stamp.N) + ",M=" + std::to_string(stamp.M) +
                      ",S=" + std::to_string(stamp.S) + "," + stamp.backbone_arch +
                      ") vs expected (F=" + std::to_string(expected.F) + ",B=" +
                      std::to_string(expected.B) + ",N=" + std::to_string(expected.N) +
                      ",M=" + std::to_string(expected.M) + ",S=" +
                      std::to_string(expected.S) + "," + expected.backbone_arch + ")");
  }

  struct TensorLoc {
    std::uint64_t offset;
    long rows, cols;
  };
  std::map<std::string, TensorLoc> locs;
  std::uint64_t offset = sizeof(kMagic) + sizeof(len) + len;
  for (const auto& tj : dir.at("tensors")) {
    TensorLoc loc{offset, tj.at("rows").get<long>(), tj.at("cols").get<long>()};
    locs[tj.at("name").get<std::string>()] = loc;
    offset += sizeof(double) * static_cast<std::uint64_t>(loc.rows) *
              static_cast<std::uint64_t>(loc.cols);
  }

  for (const auto& e : entries) {
    auto it = locs.find(e.name);
    if (it == locs.end()) {
      throw DependencyError("checkpoint " + path + " lacks tensor " + e.name);
    }
    if (it->second.rows != e.param->value.rows() ||
        it->second.cols != e.param->value.cols()) {
      throw ConfigError("checkpoint tensor " + e.name + " has shape " +
                        std::to_string(it->second.rows) + "x" +
                        std::to_string(it->second.cols) + ", expected " +
                        std::to_string(e.param->value.rows()) + "x" +
                        std::to_string(e.param->value.cols()));
    }
    in.seekg(static_cast<std::streamoff>(it->second.offset));
    in.read(reinterpret_cast<char*>(e.param->value.data()),
            static_cast<std::streamsize>(sizeof(double) * e.param->value.size()));
    if (!in) throw ParseError("truncated checkpoint: " + path);
  }
}

bool checkpoint_exists(const std::string& path) {
  return std::filesystem::exists(path);
}

}  // namespace coopsc::codec
