#pragma once

#include <stdexcept>
#include <string>

namespace sosflow {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonMonotone : public Error {
 public:
  using Error::Error;
};

class NotNormalized : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InfeasibleStart : public Error {
 public:
  using Error::Error;
};

class NoDecrease : public Error {
 public:
  NoDecrease(const std::string& what, int backoffs) : Error(what), backoffs_(backoffs) {}
  int backoffs() const { return backoffs_; }

 private:
  int backoffs_;
};

class BlowUp : public Error {
 public:
  using Error::Error;
};

class StepCollision : public Error {
 public:
  using Error::Error;
};

class InfeasibleProbe : public Error {
 public:
  using Error::Error;
};

class MonotonicityLost : public Error {
 public:
  using Error::Error;
};

}  // namespace sosflow
