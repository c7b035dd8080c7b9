#pragma once

// JSON codecs shared by io.cpp and commands.cpp. Not installed.

#include <json.hpp>

#include "casnsc/predictor.hpp"

namespace casnsc::io {

nlohmann::json train_config_to_json(const predict::TrainConfig& c);
predict::TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace casnsc::io
