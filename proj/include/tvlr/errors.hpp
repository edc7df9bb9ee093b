// Copyright 2026 The tvlr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TVLR_ERRORS_HPP
#define TVLR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tvlr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iteration cap hit or non-finite value in a dense kernel.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A_m is not Hurwitz: the Lyapunov solve is singular or P is not positive definite.
class CertificateError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// An invariant was breached beyond tolerance during integration. Carries
/// the simulation time and the name of the offending quantity.
class IntegrationError : public Error {
 public:
  IntegrationError(double time, std::string quantity, const std::string& detail)
      : Error("integration failure at t=" + std::to_string(time) + " (" +
              quantity + "): " + detail),
        time_(time),
        quantity_(std::move(quantity)) {}

  double time() const { return time_; }
  const std::string& quantity() const { return quantity_; }

 private:
  double time_;
  std::string quantity_;
};

}  // namespace tvlr

#endif  // TVLR_ERRORS_HPP
