#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermosmc/models.hpp"

// Data file schemas (comma-separated, '#' lines ignored):
//   coin toss:  one record  N,K1,K2
//   IRT 2PL:    header      P,I
//               P rows of I binary digits, e.g. 1,0,1,1

namespace thermosmc::app {

class DataFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline bool next_record(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    return true;
  }
  return false;
}

inline std::vector<long long> split_integers(const std::string& line, int lineno) {
  std::vector<long long> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    std::size_t used = 0;
    long long x = 0;
    try {
      x = std::stoll(field, &used);
    } catch (const std::exception&) {
      throw DataFormatError("line " + std::to_string(lineno) + ": expected an integer, got '" + field + "'");
    }
    if (field.find_first_not_of(" \t", used) != std::string::npos) {
      throw DataFormatError("line " + std::to_string(lineno) + ": trailing characters in '" + field + "'");
    }
    out.push_back(x);
  }
  return out;
}

}  // namespace detail

inline CoinTossData read_ct_data(std::istream& in) {
  std::string line;
  int lineno = 0;
  if (!detail::next_record(in, line, lineno)) throw DataFormatError("coin toss data: empty file");
  const auto f = detail::split_integers(line, lineno);
  if (f.size() != 3) throw DataFormatError("coin toss data: expected N,K1,K2");
  CoinTossData d;
  d.n_obs = static_cast<int>(f[0]);
  d.heads = {static_cast<int>(f[1]), static_cast<int>(f[2])};
  if (f[0] < 0 || f[1] < 0 || f[2] < 0 || f[1] > f[0] || f[2] > f[0]) {
    throw DataFormatError("coin toss data: need 0 <= K <= N");
  }
  if (detail::next_record(in, line, lineno)) throw DataFormatError("coin toss data: unexpected extra record");
  return d;
}

inline void write_ct_data(std::ostream& out, const CoinTossData& d) {
  out << d.n_obs << ',' << d.heads[0] << ',' << d.heads[1] << '\n';
}

inline IrtData read_irt_data(std::istream& in) {
  std::string line;
  int lineno = 0;
  if (!detail::next_record(in, line, lineno)) throw DataFormatError("irt data: empty file");
  const auto header = detail::split_integers(line, lineno);
  if (header.size() != 2 || header[0] <= 0 || header[1] <= 0) throw DataFormatError("irt data: header must be P,I");
  IrtData d;
  d.n_persons = static_cast<std::size_t>(header[0]);
  d.n_items = static_cast<std::size_t>(header[1]);
  d.responses.reserve(d.n_persons * d.n_items);
  for (std::size_t p = 0; p < d.n_persons; ++p) {
    if (!detail::next_record(in, line, lineno)) {
      throw DataFormatError("irt data: expected " + std::to_string(d.n_persons) + " response rows");
    }
    const auto row = detail::split_integers(line, lineno);
    if (row.size() != d.n_items) {
      throw DataFormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(d.n_items) + " responses");
    }
    for (long long r : row) {
      if (r != 0 && r != 1) throw DataFormatError("line " + std::to_string(lineno) + ": responses must be 0 or 1");
      d.responses.push_back(static_cast<std::uint8_t>(r));
    }
  }
  if (detail::next_record(in, line, lineno)) throw DataFormatError("irt data: more rows than declared");
  return d;
}

inline void write_irt_data(std::ostream& out, const IrtData& d) {
  out << d.n_persons << ',' << d.n_items << '\n';
  for (std::size_t p = 0; p < d.n_persons; ++p) {
    for (std::size_t i = 0; i < d.n_items; ++i) {
      if (i) out << ',';
      out << d.response(p, i);
    }
    out << '\n';
  }
}

}  // namespace thermosmc::app
