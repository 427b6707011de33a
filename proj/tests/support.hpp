#pragma once

#include <string>

#include <doctest.h>

#include "oracles.hpp"

namespace testing {

// Error code thrown by fn; fails the test when nothing is thrown.
template <class F>
ErrorCode code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected parcelplan::Error");
  return ErrorCode::Io;
}

template <class F>
std::string message_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace testing
