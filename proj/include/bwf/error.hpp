#pragma once

#include <stdexcept>
#include <string>

namespace bwf {

// Root of every error raised by the library. Subclasses name the failure
// family so callers (CLI exit codes, service status codes) can branch on it.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DateError : public Error {
public:
    using Error::Error;
};

class LifecycleError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class ExtrapolationError : public Error {
public:
    using Error::Error;
};

// Pump operating point left the tabulated curve; carries the station id.
class PumpRangeError : public Error {
public:
    PumpRangeError(std::string station, double flow_per_unit, bool above)
        : Error("pump operating point outside curve range at station '" + station +
                "' (flow per unit " + std::to_string(flow_per_unit) + " m3/h, " +
                (above ? "above" : "below") + " tabulated range)"),
          station_(std::move(station)),
          flow_per_unit_(flow_per_unit),
          above_(above)
    {
    }

    const std::string& station() const noexcept { return station_; }
    double flow_per_unit() const noexcept { return flow_per_unit_; }
    bool above_range() const noexcept { return above_; }

private:
    std::string station_;
    double flow_per_unit_;
    bool above_;
};

class LibraryError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class SimulationAbort : public Error {
public:
    using Error::Error;
};

}  // namespace bwf
