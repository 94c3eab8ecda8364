#pragma once

#include <stdexcept>
#include <string>

namespace msreg {

class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class io_error : public error {
public:
  using error::error;
};

class format_error : public error {
public:
  using error::error;
};

class argument_error : public error {
public:
  using error::error;
};

class shape_error : public error {
public:
  using error::error;
};

class config_error : public error {
public:
  using error::error;
};

// No source row offered two finite distances to rank.
class match_error : public error {
public:
  using error::error;
};

// RANSAC could not assemble a 4-inlier consensus.
class consensus_error : public error {
public:
  using error::error;
};

class underdetermined_error : public error {
public:
  using error::error;
};

class degeneracy_error : public error {
public:
  using error::error;
};

class point_at_infinity_error : public error {
public:
  using error::error;
};

} // namespace msreg
