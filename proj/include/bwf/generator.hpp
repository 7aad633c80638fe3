#pragma once

#include "bwf/domain.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace bwf::generator {

struct GeneratorOptions {
    std::string name = "generated";
    int municipalities = 12;
    int provinces = 2;
    int sources = 4;  // the last one is surface water when there are at least two
    int sites = 3;    // groundwater, surface, desalination in turn
    bool lifecycle = true;  // one absorption and one clustering when large enough
    std::uint64_t seed = 1;
    int start_year = 2025;
};

// Pump unit curves scaled to a design point (flow m3/h, head m).
std::shared_ptr<const hydraulics::PumpCharacteristic> pump_curves(const std::string& id, double design_flow,
                                                                  double design_head);

domain::Catalogs default_catalogs();
std::vector<scenario::DriverSpec> default_drivers(double national_budget);

// Deterministic synthetic instance that passes Instance::validate().
domain::Instance generate_instance(const GeneratorOptions& options);

}  // namespace bwf::generator
