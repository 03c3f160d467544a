#pragma once

#include "pflat/error.hpp"

#include <doctest.h>

/// Asserts that `expr` throws pflat::Error carrying `code`.
#define CHECK_ERROR_CODE(expr, expected)                                   \
  do {                                                                     \
    bool pflat_thrown_ = false;                                            \
    try {                                                                  \
      (void)(expr);                                                        \
    } catch (const pflat::Error& e) {                                      \
      pflat_thrown_ = true;                                                \
      CHECK_MESSAGE(e.code() == (expected), "got ", std::string(pflat::to_string(e.code()))); \
    }                                                                      \
    CHECK_MESSAGE(pflat_thrown_, "expected ", std::string(pflat::to_string(expected))); \
  } while (false)
