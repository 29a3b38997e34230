#include "finde/checkpoint.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "finde/errors.hpp"

namespace finde {

namespace {
constexpr const char* kFormat = "finde-checkpoint-v1";
}

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const ParamStore& ps) {
  nlohmann::json header;
  header["format"] = kFormat;
  header["meta"] = meta;
  nlohmann::json params = nlohmann::json::array();
  for (size_t i = 0; i < ps.values.size(); ++i) {
    nlohmann::json p;
    p["name"] = ps.names[i];
    p["shape"] = ps.values[i].shape();
    params.push_back(std::move(p));
  }
  header["params"] = std::move(params);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << header.dump() << "\n";
  for (const auto& t : ps.values) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed for checkpoint: " + path);
}

nlohmann::json load_checkpoint(const std::string& path, ParamStore& ps_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint missing header: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw IoError("checkpoint header parse error in " + path + ": " + e.what());
  }
  if (!header.contains("format") || header["format"] != kFormat)
    throw IoError("unrecognized checkpoint format in " + path);
  if (!header.contains("params") || !header["params"].is_array())
    throw IoError("checkpoint header missing params in " + path);

  ps_out = ParamStore{};
  for (const auto& p : header["params"]) {
    const std::string name = p.at("name").get<std::string>();
    const std::vector<long> shape = p.at("shape").get<std::vector<long>>();
    Tensor t;
    if (shape.empty()) {
      t = Tensor::scalar(0.0);
    } else if (shape.size() == 1) {
      t = Tensor::vector(shape[0]);
    } else if (shape.size() == 2) {
      t = Tensor::matrix(shape[0], shape[1]);
    } else {
      throw IoError("checkpoint param " + name + " has unsupported rank");
    }
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint truncated at param " + name + " in " + path);
    ps_out.add(name, std::move(t));
  }
  char extra;
  if (in.read(&extra, 1))
    throw IoError("checkpoint has trailing bytes: " + path);
  return header.contains("meta") ? header["meta"] : nlohmann::json::object();
}

}  // namespace finde
