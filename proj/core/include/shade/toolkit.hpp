#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shade/dataset.hpp"

namespace shade {

/// Two interlocked unit rings plus an offset s-shaped curve in 3d, classes of
/// (near) equal size, with isotropic Gaussian jitter of `noise_sigma` added
/// to every point. Requires n >= 30.
Dataset gen_rings_s(int n, double noise_sigma, std::uint64_t seed);

/// k Gaussian blobs with centers at pairwise separation >= 10 * spread plus
/// ceil(noise_ratio * n) uniform points over the cluster bounding box
/// inflated by 20%. Noise points carry the label kNoiseLabel.
Dataset gen_blobs_noise(int k, int n, int d, double spread, double noise_ratio,
                        std::uint64_t seed);

/// Parses a rectangular numeric CSV (header optional). When `label_column`
/// names or indexes a column, it is removed from the features and returned as
/// integer labels. Errors carry the offending row/column.
Dataset load_csv(const std::string& path,
                 const std::optional<std::string>& label_column = {});

/// Writes features (and the label column, when present) with
/// round-trip-exact, locale-independent decimals.
void save_csv(const Dataset& data, const std::string& path);

std::vector<int> load_labels_csv(const std::string& path);
void save_labels_csv(const std::vector<int>& labels, const std::string& path);

/// Command-line entry point: subcommands generate / fit / evaluate / cut.
/// Returns 0 on success, 1 on usage errors, 2 on data errors.
int cli_main(int argc, const char* const* argv);

}  // namespace shade
