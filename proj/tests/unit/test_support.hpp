#pragma once

#include <doctest.h>

#include <cmath>

#include "core/error.hpp"

// Asserts that `expr` throws pql::Error carrying `expected`.
#define CHECK_PQL_ERROR(expr, expected)                                   \
  do {                                                                    \
    bool pql_thrown_ = false;                                             \
    try {                                                                 \
      (void)(expr);                                                       \
    } catch (const pql::Error& pql_e_) {                                  \
      pql_thrown_ = true;                                                 \
      CHECK_MESSAGE(pql_e_.code() == (expected), pql_e_.what());          \
    }                                                                     \
    CHECK_MESSAGE(pql_thrown_, "expected a pql::Error from " #expr);      \
  } while (0)

inline bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}
