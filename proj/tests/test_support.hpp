#pragma once

#include <gtest/gtest.h>

#include <string>

#include "sango/error.hpp"

namespace sango::testing {

template <class F>
void expect_code(F&& f, ErrorCode code, const std::string& message_part = {}) {
  try {
    f();
    ADD_FAILURE() << "expected error " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
    if (!message_part.empty()) EXPECT_NE(std::string(e.what()).find(message_part), std::string::npos) << e.what();
  }
}

}  // namespace sango::testing
