#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "phylograd/backend.hpp"

namespace phylograd::cli {

inline constexpr int kSchemaVersion = 1;

// FNV-1a 64 over the concatenated parts, each followed by a NUL byte.
std::uint64_t fnv1a(const std::vector<std::string_view>& parts);
std::string hex_digest(std::uint64_t value);

// max |a - b| / max |b|, the deviation reported by `gradient --check`.
double max_relative_deviation(std::span<const double> a, std::span<const double> b);

nlohmann::json backend_json(const BackendConfig& config);
nlohmann::json timings_json(const std::vector<KernelTiming>& timings);

// Doubles round-trip through JSON with 17 significant digits.
std::string dump(const nlohmann::json& doc);

}  // namespace phylograd::cli
