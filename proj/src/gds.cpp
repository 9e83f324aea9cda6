#include "bridgec/gds.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace bridgec {

namespace {

// record type + data type bytes
constexpr std::uint16_t kHeader = 0x0002;
constexpr std::uint16_t kBgnLib = 0x0102;
constexpr std::uint16_t kLibName = 0x0206;
constexpr std::uint16_t kUnits = 0x0305;
constexpr std::uint16_t kEndLib = 0x0400;
constexpr std::uint16_t kBgnStr = 0x0502;
constexpr std::uint16_t kStrName = 0x0606;
constexpr std::uint16_t kEndStr = 0x0700;
constexpr std::uint16_t kBoundary = 0x0800;
constexpr std::uint16_t kLayer = 0x0D02;
constexpr std::uint16_t kDatatype = 0x0E02;
constexpr std::uint16_t kXy = 0x1003;
constexpr std::uint16_t kEndEl = 0x1100;

constexpr std::uint16_t kVersion = 600;
constexpr std::size_t kMaxXyPoints = 8190;  // record length is a 16-bit field

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_record(std::vector<std::uint8_t>& out, std::uint16_t type,
                std::span<const std::uint8_t> data) {
  const std::size_t len = 4 + data.size();
  if (len > 0xFFFF) throw std::range_error("gds record too long");
  put_u16(out, static_cast<std::uint16_t>(len));
  put_u16(out, type);
  out.insert(out.end(), data.begin(), data.end());
}

void put_string_record(std::vector<std::uint8_t>& out, std::uint16_t type,
                       const std::string& s) {
  std::vector<std::uint8_t> data(s.begin(), s.end());
  if (data.size() % 2) data.push_back(0);  // records are even-length
  put_record(out, type, data);
}

void put_timestamps(std::vector<std::uint8_t>& out, std::uint16_t type, const GdsTimestamp& t) {
  std::vector<std::uint8_t> data;
  for (int rep = 0; rep < 2; ++rep)  // modification and access times
    for (std::uint16_t field : t) {
      data.push_back(static_cast<std::uint8_t>(field >> 8));
      data.push_back(static_cast<std::uint8_t>(field));
    }
  put_record(out, type, data);
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
  std::vector<std::string>* warnings = nullptr;

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw std::runtime_error("gds parse error at offset " + std::to_string(at) + ": " + msg);
  }

  std::uint16_t u16(std::size_t at) const {
    return static_cast<std::uint16_t>((bytes[at] << 8) | bytes[at + 1]);
  }
  std::int32_t i32(std::size_t at) const {
    return static_cast<std::int32_t>((std::uint32_t(bytes[at]) << 24) |
                                     (std::uint32_t(bytes[at + 1]) << 16) |
                                     (std::uint32_t(bytes[at + 2]) << 8) |
                                     std::uint32_t(bytes[at + 3]));
  }

  struct Record {
    std::uint16_t type = 0;
    std::size_t offset = 0;
    std::span<const std::uint8_t> data;
  };

  bool at_end() const { return pos >= bytes.size(); }

  Record next() {
    if (pos + 4 > bytes.size()) fail("truncated stream", pos);
    const std::size_t at = pos;
    const std::uint16_t len = u16(at);
    if (len < 4 || len % 2) fail("bad record length " + std::to_string(len), at);
    if (at + len > bytes.size()) fail("truncated stream inside record", at);
    Record r;
    r.type = u16(at + 2);
    r.offset = at;
    r.data = bytes.subspan(at + 4, len - 4);
    pos = at + len;
    return r;
  }

  void warn_unknown(const Record& r) {
    if (warnings)
      warnings->push_back("skipped unknown record 0x" + [&] {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%04X", r.type);
        return std::string(buf);
      }() + " at offset " + std::to_string(r.offset));
  }
};

std::string read_string(std::span<const std::uint8_t> data) {
  std::string s(data.begin(), data.end());
  while (!s.empty() && s.back() == '\0') s.pop_back();
  return s;
}

GdsTimestamp read_timestamp(const Reader& rd, const Reader::Record& r) {
  if (r.data.size() != 24) rd.fail("timestamp record must hold 12 words", r.offset);
  GdsTimestamp t{};
  for (int i = 0; i < 6; ++i)
    t[i] = static_cast<std::uint16_t>((r.data[2 * i] << 8) | r.data[2 * i + 1]);
  return t;  // access time is written equal to modification time; ignore it
}

}  // namespace

std::uint64_t encode_gds_real(double value) {
  if (!std::isfinite(value)) throw std::range_error("gds real: non-finite value");
  if (value == 0.0) return 0;
  std::uint64_t sign = 0;
  if (value < 0) {
    sign = std::uint64_t{1} << 63;
    value = -value;
  }
  int e2 = 0;
  const double fr = std::frexp(value, &e2);  // value = fr * 2^e2, fr in [0.5, 1)
  // base-16 exponent E = ceil(e2 / 4); mantissa = value / 16^E scaled to 56 bits
  const int e16 = (e2 + 3) >= 0 ? (e2 + 3) / 4 : -((-e2 - 3) / 4 + (((-e2 - 3) % 4) ? 1 : 0));
  const int shift = e2 + 3 - 4 * e16;  // 0..3
  const auto sig = static_cast<std::uint64_t>(std::ldexp(fr, 53));  // exact 53-bit integer
  const std::uint64_t mantissa = sig << shift;
  const int exp_field = e16 + 64;
  if (exp_field < 0 || exp_field > 127) throw std::range_error("gds real: exponent overflow");
  return sign | (static_cast<std::uint64_t>(exp_field) << 56) | mantissa;
}

double decode_gds_real(std::uint64_t bits) {
  const std::uint64_t mantissa = bits & ((std::uint64_t{1} << 56) - 1);
  if (mantissa == 0) return 0.0;
  const int exp_field = static_cast<int>((bits >> 56) & 0x7F);
  const double v = std::ldexp(static_cast<double>(mantissa), 4 * (exp_field - 64) - 56);
  return (bits >> 63) ? -v : v;
}

std::vector<std::uint8_t> write_gds(const GdsLibrary& lib) {
  std::vector<std::uint8_t> out;

  std::vector<std::uint8_t> ver;
  ver.push_back(kVersion >> 8);
  ver.push_back(kVersion & 0xFF);
  put_record(out, kHeader, ver);
  put_timestamps(out, kBgnLib, lib.timestamp);
  put_string_record(out, kLibName, lib.name);

  if (!(lib.db_in_user > 0) || !(lib.db_unit_m > 0))
    throw std::range_error("gds units must be positive");
  std::vector<std::uint8_t> units;
  put_u64(units, encode_gds_real(lib.db_in_user));
  put_u64(units, encode_gds_real(lib.db_unit_m));
  put_record(out, kUnits, units);

  for (const GdsCell& cell : lib.cells) {
    put_timestamps(out, kBgnStr, cell.timestamp);
    put_string_record(out, kStrName, cell.name);
    for (std::size_t bi = 0; bi < cell.boundaries.size(); ++bi) {
      const GdsBoundary& b = cell.boundaries[bi];
      if (b.xy.size() < 4 || !(b.xy.front() == b.xy.back()))
        throw std::range_error("gds boundary " + std::to_string(bi) + " in cell '" + cell.name +
                               "' must be a closed loop of at least 4 points");
      if (b.xy.size() > kMaxXyPoints)
        throw std::range_error("gds boundary " + std::to_string(bi) + " in cell '" + cell.name +
                               "' exceeds the single-record vertex limit");
      put_record(out, kBoundary, {});
      std::vector<std::uint8_t> layer;
      put_u16(layer, static_cast<std::uint16_t>(b.layer));
      put_record(out, kLayer, layer);
      std::vector<std::uint8_t> dt;
      put_u16(dt, static_cast<std::uint16_t>(b.datatype));
      put_record(out, kDatatype, dt);
      std::vector<std::uint8_t> xy;
      for (const PointNm& p : b.xy) {
        if (p.x > std::numeric_limits<std::int32_t>::max() ||
            p.x < std::numeric_limits<std::int32_t>::min() ||
            p.y > std::numeric_limits<std::int32_t>::max() ||
            p.y < std::numeric_limits<std::int32_t>::min())
          throw std::range_error("gds boundary " + std::to_string(bi) + " in cell '" +
                                 cell.name + "' has a coordinate outside the int32 range");
        put_u32(xy, static_cast<std::uint32_t>(static_cast<std::int32_t>(p.x)));
        put_u32(xy, static_cast<std::uint32_t>(static_cast<std::int32_t>(p.y)));
      }
      put_record(out, kXy, xy);
      put_record(out, kEndEl, {});
    }
    put_record(out, kEndStr, {});
  }
  put_record(out, kEndLib, {});
  return out;
}

GdsLibrary read_gds(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings) {
  Reader rd{bytes, 0, warnings};
  GdsLibrary lib;
  lib.cells.clear();

  auto rec = rd.next();
  if (rec.type != kHeader) rd.fail("expected HEADER", rec.offset);
  rec = rd.next();
  if (rec.type != kBgnLib) rd.fail("expected BGNLIB", rec.offset);
  lib.timestamp = read_timestamp(rd, rec);

  bool have_name = false, have_units = false, ended = false;
  while (!ended) {
    if (rd.at_end()) rd.fail("missing ENDLIB", rd.pos);
    rec = rd.next();
    switch (rec.type) {
      case kLibName:
        lib.name = read_string(rec.data);
        have_name = true;
        break;
      case kUnits: {
        if (rec.data.size() != 16) rd.fail("UNITS must hold two 8-byte reals", rec.offset);
        std::uint64_t a = 0, b = 0;
        for (int i = 0; i < 8; ++i) a = (a << 8) | rec.data[i];
        for (int i = 8; i < 16; ++i) b = (b << 8) | rec.data[i];
        lib.db_in_user = decode_gds_real(a);
        lib.db_unit_m = decode_gds_real(b);
        if (!(lib.db_in_user > 0) || !(lib.db_unit_m > 0))
          rd.fail("non-positive units", rec.offset);
        have_units = true;
        break;
      }
      case kBgnStr: {
        GdsCell cell;
        cell.timestamp = read_timestamp(rd, rec);
        rec = rd.next();
        if (rec.type != kStrName) rd.fail("expected STRNAME", rec.offset);
        cell.name = read_string(rec.data);
        bool cell_done = false;
        while (!cell_done) {
          if (rd.at_end()) rd.fail("missing ENDSTR", rd.pos);
          rec = rd.next();
          if (rec.type == kEndStr) {
            cell_done = true;
          } else if (rec.type == kBoundary) {
            GdsBoundary b;
            bool el_done = false, have_xy = false;
            while (!el_done) {
              if (rd.at_end()) rd.fail("missing ENDEL", rd.pos);
              rec = rd.next();
              switch (rec.type) {
                case kLayer:
                  if (rec.data.size() != 2) rd.fail("LAYER must hold one word", rec.offset);
                  b.layer = static_cast<std::int16_t>(rd.u16(rec.offset + 4));
                  break;
                case kDatatype:
                  if (rec.data.size() != 2) rd.fail("DATATYPE must hold one word", rec.offset);
                  b.datatype = static_cast<std::int16_t>(rd.u16(rec.offset + 4));
                  break;
                case kXy: {
                  if (rec.data.size() % 8) rd.fail("XY length not a multiple of 8", rec.offset);
                  const std::size_t n = rec.data.size() / 8;
                  for (std::size_t i = 0; i < n; ++i) {
                    b.xy.push_back(PointNm{rd.i32(rec.offset + 4 + 8 * i),
                                           rd.i32(rec.offset + 4 + 8 * i + 4)});
                  }
                  have_xy = true;
                  break;
                }
                case kEndEl:
                  el_done = true;
                  break;
                default:
                  rd.warn_unknown(rec);
              }
            }
            if (!have_xy) rd.fail("boundary without XY", rec.offset);
            if (b.xy.size() < 4 || !(b.xy.front() == b.xy.back()))
              rd.fail("boundary loop not closed", rec.offset);
            cell.boundaries.push_back(std::move(b));
          } else {
            rd.warn_unknown(rec);
          }
        }
        lib.cells.push_back(std::move(cell));
        break;
      }
      case kEndLib:
        ended = true;
        break;
      default:
        rd.warn_unknown(rec);
    }
  }
  if (!have_name) throw std::runtime_error("gds parse error: missing LIBNAME");
  if (!have_units) throw std::runtime_error("gds parse error: missing UNITS");
  return lib;
}

GdsLibrary plan_to_gds(const ExposurePlan& plan, const std::string& lib_name,
                       const std::string& cell_name, const GdsTimestamp& timestamp) {
  GdsLibrary lib;
  lib.name = lib_name;
  lib.timestamp = timestamp;
  GdsCell cell;
  cell.name = cell_name;
  cell.timestamp = timestamp;
  for (const PlanLayer& layer : plan.layers) {
    if (layer.layer_number < 0 || layer.layer_number > 32767)
      throw std::range_error("plan layer number outside the gds range");
    for (const PlanPolygon& p : layer.polygons) {
      GdsBoundary b;
      b.layer = static_cast<std::int16_t>(layer.layer_number);
      b.datatype = 0;
      b.xy = p.poly.v;
      b.xy.push_back(p.poly.v.front());  // close the loop
      cell.boundaries.push_back(std::move(b));
    }
  }
  lib.cells.push_back(std::move(cell));
  return lib;
}

}  // namespace bridgec
