#include "rdlasso/kernel.hpp"

#include <cmath>

namespace rdlasso {

double kernel_weight(KernelFamily family, double u) {
  double a = std::abs(u);
  if (a > 1.0) return 0.0;
  switch (family) {
    case KernelFamily::uniform:
      return 0.5;
    case KernelFamily::triangular:
      return 1.0 - a;
    case KernelFamily::epanechnikov:
      return 0.75 * (1.0 - u * u);
  }
  return 0.0;
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "uniform") return KernelFamily::uniform;
  if (name == "triangular") return KernelFamily::triangular;
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  throw std::invalid_argument("unknown kernel family: " + name);
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::uniform: return "uniform";
    case KernelFamily::triangular: return "triangular";
    case KernelFamily::epanechnikov: return "epanechnikov";
  }
  return "unknown";
}

}  // namespace rdlasso
