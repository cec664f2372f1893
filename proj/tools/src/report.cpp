#include "phylograd_cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace phylograd::cli {

std::uint64_t fnv1a(const std::vector<std::string_view>& parts) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (std::string_view part : parts) {
    for (char c : part) mix(static_cast<unsigned char>(c));
    mix(0);
  }
  return h;
}

std::string hex_digest(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

double max_relative_deviation(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

nlohmann::json backend_json(const BackendConfig& config) {
  return {{"kind", config.kind == BackendKind::serial ? "serial" : "parallel"},
          {"workers", config.kind == BackendKind::serial ? 1 : config.workers},
          {"cbsNucleotide", config.cbs_nucleotide},
          {"cbsLargeState", config.cbs_large_state},
          {"pbs", config.pbs},
          {"mbs", config.mbs},
          {"stagingBudgetBytes", config.staging_budget_bytes}};
}

nlohmann::json timings_json(const std::vector<KernelTiming>& timings) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : timings) {
    out.push_back({{"name", t.name}, {"calls", t.calls}, {"totalNs", t.total_ns}});
  }
  return out;
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2); }

}  // namespace phylograd::cli
