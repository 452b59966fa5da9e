#include "tdas/errors.hpp"

#include <sstream>

namespace tdas {

namespace {

std::string format_step(double step, double tau) {
    std::ostringstream os;
    os << "integration step h=" << step << " us exceeds the delay tau=" << tau << " us";
    return os.str();
}

std::string format_time(double t) {
    std::ostringstream os;
    os.precision(17);
    os << "state became non-finite at t=" << t << " us";
    return os.str();
}

} // namespace

StepTooLarge::StepTooLarge(double step, double tau) : Error(format_step(step, tau)) {}

NonFiniteState::NonFiniteState(double time) : Error(format_time(time)), time_(time) {}

SearchFailed::SearchFailed(const std::string& what, long grid_index)
    : Error(grid_index >= 0 ? what + " (grid index " + std::to_string(grid_index) + ")" : what),
      grid_index_(grid_index) {}

DivergentFluctuations::DivergentFluctuations(const std::string& what, double nu)
    : Error(what), nu_(nu) {}

} // namespace tdas
