#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace propsense {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Malformed or inconsistent input (files, indices, parameters). CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a result (singular solve, non-finite
/// energy). CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Worker threads for element loops (OpenMP). 1 forces serial execution.
void set_num_threads(int n);
int num_threads();

}  // namespace propsense
