#include <json.hpp>

#include <set>

#include "core/bytes.hpp"
#include "models/model.hpp"

namespace amc::nn {

namespace {

using nlohmann::json;

std::string blob_name(const std::string& param, const char* ext) {
  std::string s = param;
  for (char& c : s) {
    if (c == '.') c = '_';
  }
  return s + ext;
}

json layer_to_json(const LayerSpec& s) {
  json j;
  j["name"] = s.name;
  j["kind"] = layer_kind_name(s.kind);
  j["inputs"] = s.inputs;
  switch (s.kind) {
    case LayerKind::kConv:
      j["in_channels"] = s.in_channels;
      j["out_channels"] = s.out_channels;
      j["kh"] = s.kh;
      j["kw"] = s.kw;
      j["pad_h"] = s.pad_h;
      j["pad_w"] = s.pad_w;
      break;
    case LayerKind::kDense:
    case LayerKind::kDenseSparse:
    case LayerKind::kDensePq:
      j["in_dim"] = s.in_dim;
      j["out_dim"] = s.out_dim;
      break;
    case LayerKind::kDropout:
      j["rate"] = s.rate;
      break;
    default:
      break;
  }
  return j;
}

LayerSpec layer_from_json(const json& j) {
  LayerSpec s;
  s.name = j.at("name").get<std::string>();
  s.kind = layer_kind_from_name(j.at("kind").get<std::string>());
  s.inputs = j.at("inputs").get<std::vector<int>>();
  switch (s.kind) {
    case LayerKind::kConv:
      s.in_channels = j.at("in_channels").get<int>();
      s.out_channels = j.at("out_channels").get<int>();
      s.kh = j.at("kh").get<int>();
      s.kw = j.at("kw").get<int>();
      s.pad_h = j.at("pad_h").get<int>();
      s.pad_w = j.at("pad_w").get<int>();
      break;
    case LayerKind::kDense:
    case LayerKind::kDenseSparse:
    case LayerKind::kDensePq:
      s.in_dim = j.at("in_dim").get<int>();
      s.out_dim = j.at("out_dim").get<int>();
      break;
    case LayerKind::kDropout:
      s.rate = j.at("rate").get<double>();
      break;
    default:
      break;
  }
  return s;
}

}  // namespace

void save_model(const ModelGraph& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format"] = "amc-model";
  manifest["version"] = 1;
  manifest["arch"] = m.arch;
  manifest["first_fc"] = m.first_fc;
  json layers = json::array();
  for (const auto& s : m.layers) layers.push_back(layer_to_json(s));
  manifest["layers"] = layers;

  json params = json::array();
  for (const auto& [name, t] : m.params) {
    if (m.sparse.count(name) || m.codebooks.count(name)) continue;
    const std::string blob = blob_name(name, ".tnsr");
    write_file(dir / blob, tensor_to_blob(*t));
    params.push_back({{"name", name}, {"kind", "tnsr"}, {"blob", blob}});
  }
  for (const auto& [name, w] : m.sparse) {
    const std::string blob = blob_name(name, ".csrw");
    write_file(dir / blob, csr_to_blob(w));
    params.push_back({{"name", name}, {"kind", "csrw"}, {"blob", blob}});
  }
  for (const auto& [name, cb] : m.codebooks) {
    const std::string blob = blob_name(name, ".pqcb");
    write_file(dir / blob, codebook_to_blob(cb));
    params.push_back({{"name", name}, {"kind", "pqcb"}, {"blob", blob}});
  }
  manifest["params"] = params;
  manifest["provenance"] = m.provenance;
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

ModelGraph load_model(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw FormatError("model manifest: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format").get<std::string>() != "amc-model") {
      throw FormatError("model manifest: wrong format tag");
    }
    if (manifest.at("version").get<int>() != 1) {
      throw FormatError("model manifest: unsupported version");
    }
    ModelGraph m;
    m.arch = manifest.at("arch").get<std::string>();
    m.first_fc = manifest.at("first_fc").get<std::string>();
    std::set<std::string> names;
    for (const auto& j : manifest.at("layers")) {
      m.layers.push_back(layer_from_json(j));
      if (!names.insert(m.layers.back().name).second) {
        throw FormatError("model manifest: duplicate layer name '" +
                          m.layers.back().name + "'");
      }
    }
    if (manifest.contains("provenance")) {
      m.provenance =
          manifest.at("provenance").get<std::map<std::string, std::string>>();
    }
    for (const auto& j : manifest.at("params")) {
      const std::string name = j.at("name").get<std::string>();
      const std::string kind = j.at("kind").get<std::string>();
      const std::filesystem::path blob = dir / j.at("blob").get<std::string>();
      if (!std::filesystem::exists(blob)) {
        throw FormatError("model manifest references missing blob " +
                          blob.filename().string());
      }
      const auto bytes = read_file(blob);
      if (kind == "tnsr") {
        m.params[name] = make_tensor(tensor_from_blob(bytes.data(), bytes.size()));
      } else if (kind == "csrw") {
        m.sparse[name] = csr_from_blob(bytes.data(), bytes.size());
      } else if (kind == "pqcb") {
        m.codebooks[name] = codebook_from_blob(bytes.data(), bytes.size());
      } else {
        throw FormatError("model manifest: unknown blob kind '" + kind + "'");
      }
    }
    // PQ layers run on their reconstructed weights.
    for (const auto& [name, cb] : m.codebooks) {
      auto w = make_tensor(cb.reconstruct());
      w->set_requires_grad(false);
      m.params[name] = w;
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError("model manifest: " + std::string(e.what()));
  }
}

}  // namespace amc::nn
