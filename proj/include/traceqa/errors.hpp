#pragma once

#include <stdexcept>
#include <string>

namespace traceqa {

// Library code throws; only the CLI maps exception types to exit codes
// (usage 1, data 2, responder protocol 3).

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parse failure in structured text (plan source, JSONL line). Positions are
// 1-based; column 0 means "whole line".
struct ParseError : DataError {
  int line;
  int column;
  ParseError(const std::string& msg, int line_no, int col)
      : DataError("line " + std::to_string(line_no) +
                  (col > 0 ? ", column " + std::to_string(col) : std::string()) +
                  ": " + msg),
        line(line_no),
        column(col) {}
};

}  // namespace traceqa
