#pragma once

// File formats.
//
// Dataset (JSON lines), one record per line:
//   {"id": "ped-0001", "t1": 1, "t2": 0, "branch": 1, "t_enter": 4.5,
//    "points": [[t, x, y], ...]}
// t1/t2, branch and t_enter are optional.
//
// Map (JSON):
//   {"curb_frame_angle": rad, "corner": [x, y],
//    "bounds": [min_x, min_y, max_x, max_y],
//    "lights": {"encoding": "tr = t1", "complementary": true}}
//
// Model (JSON container, "format": "casnsc-model", "version": N): grid,
// dictionary, transition counts, feature set, optional map, training config
// and every GP pattern with its hyperparameters and training set. Loading
// refits the GPs from the stored data and rejects other versions.

#include <filesystem>
#include <string>

#include "casnsc/dataset.hpp"
#include "casnsc/predictor.hpp"

namespace casnsc::io {

inline constexpr int kModelFormatVersion = 1;

std::string dataset_to_string(const Dataset& ds);
Dataset dataset_from_string(const std::string& text);
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);

std::string map_to_string(const context::IntersectionMap& map);
context::IntersectionMap map_from_string(const std::string& text);
void write_map(const std::filesystem::path& path, const context::IntersectionMap& map);
context::IntersectionMap read_map(const std::filesystem::path& path);

std::string model_to_string(const predict::TrainedModel& model);
predict::TrainedModel model_from_string(const std::string& text);
void write_model(const std::filesystem::path& path, const predict::TrainedModel& model);
predict::TrainedModel read_model(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace casnsc::io
