#include <filesystem>
#include <fstream>
#include <vector>

#include "finde/errors.hpp"
#include "finde/systems.hpp"

namespace finde {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kFormat = "finde-dataset-v1";

}  // namespace

void save_dataset(const std::string& dir, const TrajectorySet& data) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory " + dir);

  json manifest = {
      {"format", kFormat},
      {"system", system_kind_name(data.kind)},
      {"n_state", data.n_state},
      {"n_series", data.n_series()},
      {"n_steps", data.n_steps()},
      {"dt", data.dt},
      {"seed", data.seed},
      {"generator_tolerances", {{"rtol", data.gen_rtol}, {"atol", data.gen_atol}}},
      {"normalization",
       {{"mean", std::vector<double>(data.norm_mean.data(),
                                     data.norm_mean.data() + data.norm_mean.size())},
        {"std", std::vector<double>(data.norm_std.data(),
                                    data.norm_std.data() + data.norm_std.size())}}},
      {"series_metadata", data.series_meta},
  };
  {
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write manifest.json in " + dir);
    out << manifest.dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "data.f64", std::ios::binary);
    if (!out) throw IoError("cannot write data.f64 in " + dir);
    for (const MatRM& tr : data.series)  // row-major: [step][state] per series
      out.write(reinterpret_cast<const char*>(tr.data()),
                static_cast<std::streamsize>(sizeof(double) * tr.size()));
    if (!out) throw IoError("short write to data.f64 in " + dir);
  }
}

TrajectorySet load_dataset(const std::string& dir) {
  json manifest;
  {
    std::ifstream in(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!in) throw IoError("cannot open manifest.json in " + dir);
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw IoError(std::string("malformed manifest.json: ") + e.what());
    }
  }
  if (manifest.value("format", "") != kFormat)
    throw IoError("unrecognized dataset format in " + dir);

  TrajectorySet data;
  try {
    data.kind = system_kind_from_name(manifest.at("system").get<std::string>());
    data.n_state = manifest.at("n_state").get<long>();
    data.dt = manifest.at("dt").get<double>();
    data.seed = manifest.at("seed").get<std::uint64_t>();
    data.gen_rtol = manifest.at("generator_tolerances").at("rtol").get<double>();
    data.gen_atol = manifest.at("generator_tolerances").at("atol").get<double>();
    const auto mean = manifest.at("normalization").at("mean").get<std::vector<double>>();
    const auto stdv = manifest.at("normalization").at("std").get<std::vector<double>>();
    data.norm_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    data.norm_std = Eigen::Map<const Eigen::VectorXd>(stdv.data(), stdv.size());
    data.series_meta =
        manifest.at("series_metadata").get<std::vector<json>>();
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest.json missing fields: ") + e.what());
  }
  const long n_series = manifest.at("n_series").get<long>();
  const long n_steps = manifest.at("n_steps").get<long>();
  if (data.n_state != system_width(data.kind))
    throw IoError("manifest n_state disagrees with system width");
  if (static_cast<long>(data.series_meta.size()) != n_series)
    throw IoError("manifest series_metadata length disagrees with n_series");
  if (data.norm_mean.size() != data.n_state || data.norm_std.size() != data.n_state)
    throw IoError("manifest normalization width disagrees with n_state");

  std::ifstream in(fs::path(dir) / "data.f64", std::ios::binary);
  if (!in) throw IoError("cannot open data.f64 in " + dir);
  const std::streamsize per_series =
      static_cast<std::streamsize>(sizeof(double) * (n_steps + 1) * data.n_state);
  for (long i = 0; i < n_series; ++i) {
    MatRM tr(n_steps + 1, data.n_state);
    in.read(reinterpret_cast<char*>(tr.data()), per_series);
    if (in.gcount() != per_series) throw IoError("data.f64 truncated in " + dir);
    data.series.push_back(std::move(tr));
  }
  in.peek();
  if (!in.eof()) throw IoError("data.f64 has trailing bytes in " + dir);
  return data;
}

}  // namespace finde
