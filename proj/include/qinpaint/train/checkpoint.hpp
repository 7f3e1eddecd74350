#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "qinpaint/qnn/network.hpp"

namespace qinpaint::train {

/// Writes `<stem>.bin` (little-endian float64, flattened parameters) and
/// `<stem>.json` (block layout and iteration). Returns the manifest path.
std::filesystem::path save_checkpoint(const qnn::ParameterSet& params, const std::filesystem::path& dir,
                                      std::size_t iteration);

/// Restores values from a manifest written by save_checkpoint. The target must
/// already have the matching layout.
void load_checkpoint(const std::filesystem::path& manifest, qnn::ParameterSet& params);

/// CSV with header `iter,loss`, full double precision.
void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace);
std::vector<double> read_loss_trace(const std::filesystem::path& path);

}  // namespace qinpaint::train
