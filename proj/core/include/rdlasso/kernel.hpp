#pragma once

#include <stdexcept>
#include <string>

namespace rdlasso {

enum class KernelFamily { uniform, triangular, epanechnikov };

/// Second-order kernel with compact support [-1, 1] plus a bandwidth in
/// units of the running variable.
struct KernelSpec {
  KernelFamily family = KernelFamily::triangular;
  double bandwidth = 1.0;

  KernelSpec() = default;
  KernelSpec(KernelFamily family, double bandwidth)
      : family(family), bandwidth(bandwidth) {
    if (!(bandwidth > 0.0)) {
      throw std::invalid_argument("KernelSpec: bandwidth must be positive");
    }
  }
};

/// K(u): uniform 1/2, triangular (1-|u|), epanechnikov 3/4 (1-u^2),
/// all supported on |u| <= 1.
double kernel_weight(KernelFamily family, double u);

inline double kernel_weight(const KernelSpec& spec, double u) {
  return kernel_weight(spec.family, u);
}

KernelFamily kernel_family_from_string(const std::string& name);
std::string to_string(KernelFamily family);

}  // namespace rdlasso
