#include "bhchaos/manifest.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "bhchaos/errors.hpp"
#include "bhchaos/eigenstate_stats.hpp"
#include "bhchaos/util/digest.hpp"
#include "bhchaos/util/rng.hpp"

namespace bhchaos {

struct RunManifest::Impl {
  nlohmann::ordered_json doc;
  std::vector<std::filesystem::path> paths;
  std::vector<std::string> digests;
};

RunManifest::RunManifest(std::string command) : impl_(std::make_unique<Impl>()) {
  auto& d = impl_->doc;
  d["tool"] = "bhchaos";
  d["version"] = kToolVersion;
  d["command"] = std::move(command);
  d["status"] = "ok";
  d["arguments"] = nlohmann::ordered_json::object();
  d["seeds"] = nlohmann::ordered_json::object();
  d["rng"] = util::CounterRng::kAlgorithm;
  d["outputs"] = nlohmann::ordered_json::array();
  d["timings_s"] = nlohmann::ordered_json::object();
  d["notes"] = nlohmann::ordered_json::array({kGoeMeanTruncation,
                                              "GOE D1 variances come from a normalized-Gaussian surrogate pool"});
  d["warnings"] = nlohmann::ordered_json::array();
}

RunManifest::~RunManifest() = default;
RunManifest::RunManifest(RunManifest&&) noexcept = default;
RunManifest& RunManifest::operator=(RunManifest&&) noexcept = default;

void RunManifest::set_config(const JobConfig& config) {
  nlohmann::ordered_json c = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config.canonical()) c[k] = v;
  impl_->doc["config"] = c;
  impl_->doc["config_digest"] = config.digest();
  add_seed("seed", config.seed);
}

void RunManifest::set_argument(const std::string& key, const std::string& value) {
  impl_->doc["arguments"][key] = value;
}

void RunManifest::add_seed(const std::string& name, std::uint64_t seed) { impl_->doc["seeds"][name] = seed; }

void RunManifest::add_timing(const std::string& name, double seconds) { impl_->doc["timings_s"][name] = seconds; }

void RunManifest::add_note(const std::string& note) { impl_->doc["notes"].push_back(note); }

void RunManifest::add_warning(const std::string& warning) { impl_->doc["warnings"].push_back(warning); }

void RunManifest::add_output(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("output " + path.string() + " was not produced");
  const std::string digest = util::sha256_file(path);
  impl_->doc["outputs"].push_back({{"path", path.filename().string()},
                                   {"sha256", digest},
                                   {"bytes", std::filesystem::file_size(path)}});
  impl_->paths.push_back(path);
  impl_->digests.push_back(digest);
}

void RunManifest::set_failure(const std::string& error) {
  impl_->doc["status"] = "error";
  impl_->doc["error"] = error;
}

bool RunManifest::ok() const { return impl_->doc["status"] == "ok"; }

const std::vector<std::filesystem::path>& RunManifest::outputs() const { return impl_->paths; }

bool RunManifest::verify_outputs() const {
  for (std::size_t i = 0; i < impl_->paths.size(); ++i) {
    if (!std::filesystem::exists(impl_->paths[i])) return false;
    if (util::sha256_file(impl_->paths[i]) != impl_->digests[i]) return false;
  }
  return true;
}

std::string RunManifest::json() const { return impl_->doc.dump(2) + "\n"; }

void RunManifest::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << json();
}

}  // namespace bhchaos
