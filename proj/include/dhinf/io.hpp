#pragma once

#include <stdexcept>
#include <string>

#include "dhinf/model.hpp"

namespace dhinf::io {

// Unreadable or invalid plant/controller file. The message names the file
// position or the offending field.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

TimeDelayPlant parse_plant(const std::string& text);
ControllerRealization parse_controller(const std::string& text);

TimeDelayPlant read_plant_file(const std::string& path);
ControllerRealization read_controller_file(const std::string& path);

std::string plant_to_json(const TimeDelayPlant& plant);
std::string controller_to_json(const ControllerRealization& controller);

/// Order-zero controllers carry no shape information in the file; give them
/// the 0 x ny and nu x 0 blocks the plant needs.
ControllerRealization fit_to_plant(ControllerRealization controller, const TimeDelayPlant& plant);

}  // namespace dhinf::io
