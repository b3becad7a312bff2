/**
 * @file errors.hpp
 * @brief Exception types shared by every csifb module.
 *
 * ContractError covers precondition violations (bad shapes, out-of-range
 * arguments). FormatError covers malformed files and byte streams and carries
 * the byte offset where parsing stopped. The CLI maps the first family to exit
 * code 2 and the second (together with I/O failures) to exit code 3.
 */
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csifb {

class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// H_k is identically zero, so no precoding direction exists.
class DegenerateChannelError : public ContractError {
 public:
  DegenerateChannelError(std::size_t subband, const std::string& what)
      : ContractError(what), subband_(subband) {}
  std::size_t subband() const { return subband_; }

 private:
  std::size_t subband_;
};

/// SGCS of a zero vector.
class UndefinedMetricError : public ContractError {
 public:
  using ContractError::ContractError;
};

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Control information or codeword bits that cannot be decoded.
class DecodeError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace csifb
