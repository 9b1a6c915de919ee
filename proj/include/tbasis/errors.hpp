#pragma once

#include <stdexcept>

namespace tbasis {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SizeMismatch final : Error { using Error::Error; };
struct ShapeMismatch final : Error { using Error::Error; };
struct BadPermutation final : Error { using Error::Error; };
struct IndexOutOfRange final : Error { using Error::Error; };
struct UnsupportedBase final : Error { using Error::Error; };
struct BadConfig final : Error { using Error::Error; };
struct NonFinite final : Error { using Error::Error; };
struct IoError final : Error { using Error::Error; };

}  // namespace tbasis
