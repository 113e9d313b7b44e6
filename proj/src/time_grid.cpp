#include "acoustica/time_grid.hpp"

#include <sstream>

#include "acoustica/errors.hpp"

namespace acoustica {

TimeGrid TimeGrid::make(double T, double tau, double t1, double cfl_safety) {
  if (!(T > 0.0) || !(tau > 0.0)) throw ParameterError("time grid needs T > 0 and tau > 0");
  if (!(t1 > 0.0) || !(t1 < T)) throw ParameterError("source cutoff t1 must lie in (0, T)");
  if (!(cfl_safety > 0.0)) throw ParameterError("cfl_safety must be positive");
  const double steps = T / tau;
  const double r = std::round(steps);
  if (std::abs(steps - r) > 1e-9 * r) {
    std::ostringstream os;
    os << "T = " << T << " is not an integer multiple of tau = " << tau;
    throw ParameterError(os.str());
  }
  TimeGrid g;
  g.T = T;
  g.tau = tau;
  g.n_steps = static_cast<std::size_t>(r);
  g.t1 = t1;
  g.cfl_safety = cfl_safety;
  return g;
}

double plane_wave_source(double t, const SourceSpec& spec) {
  if (t > 0.0 && t < spec.duration()) return spec.amplitude * std::sin(spec.omega * t);
  return 0.0;
}

}  // namespace acoustica
