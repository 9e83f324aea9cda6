#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bridgec/geometry.hpp"
#include "bridgec/layout.hpp"

namespace bridgec {

// (year, month, day, hour, minute, second); fixed by default so output bytes
// are reproducible
using GdsTimestamp = std::array<std::uint16_t, 6>;
inline constexpr GdsTimestamp kFixedTimestamp = {2000, 1, 1, 0, 0, 0};

struct GdsBoundary {
  std::int16_t layer = 0;
  std::int16_t datatype = 0;
  std::vector<PointNm> xy;  // closed loop: first vertex repeated last, >= 4 points

  friend bool operator==(const GdsBoundary&, const GdsBoundary&) = default;
};

struct GdsCell {
  std::string name;
  GdsTimestamp timestamp = kFixedTimestamp;
  std::vector<GdsBoundary> boundaries;

  friend bool operator==(const GdsCell&, const GdsCell&) = default;
};

struct GdsLibrary {
  std::string name = "LIB";
  // stored exactly as the UNITS record holds them; defaults give a 1 nm
  // database grid with 1 um user units
  double db_in_user = 1e-3;  // database units per user unit
  double db_unit_m = 1e-9;   // one database unit in meters
  GdsTimestamp timestamp = kFixedTimestamp;
  std::vector<GdsCell> cells;

  double user_unit_m() const { return db_unit_m / db_in_user; }

  friend bool operator==(const GdsLibrary&, const GdsLibrary&) = default;
};

// Serializes the library as a GDSII stream (big-endian records, excess-64
// reals in UNITS). Pure function of the library: identical inputs give
// identical bytes. Coordinates outside int32 raise std::range_error.
std::vector<std::uint8_t> write_gds(const GdsLibrary& lib);

// Parses a GDSII stream written by write_gds; unknown record types are
// skipped with a warning. Structural errors throw std::runtime_error with
// the byte offset.
GdsLibrary read_gds(std::span<const std::uint8_t> bytes,
                    std::vector<std::string>* warnings = nullptr);

// 8-byte excess-64 real conversion, exact roundtrip for any finite double
// within the format's exponent range.
std::uint64_t encode_gds_real(double value);
double decode_gds_real(std::uint64_t bits);

// One cell named cell_name holding every plan polygon as a boundary on its
// layer (datatype 0).
GdsLibrary plan_to_gds(const ExposurePlan& plan, const std::string& lib_name,
                       const std::string& cell_name,
                       const GdsTimestamp& timestamp = kFixedTimestamp);

}  // namespace bridgec
