#include "aqe/block_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "aqe/error.hpp"
#include "aqe/hash.hpp"

namespace aqe {
namespace {

constexpr char kMagic[4] = {'A', 'Q', 'E', 'B'};
constexpr std::uint32_t kBlockVersion = 1;

template <typename T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& buf, const std::filesystem::path& path) : buf_(buf), path_(path) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > buf_.size()) fail("truncated");
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view bytes(std::size_t n) {
    if (pos_ + n > buf_.size()) fail("truncated");
    std::string_view out(buf_.data() + pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == buf_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::kCorrupt, "block " + path_.string() + ": " + what);
  }

 private:
  const std::string& buf_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "missing block file " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

std::uint64_t write_block(const std::filesystem::path& path, const Table& table,
                          std::size_t begin, std::size_t end,
                          const std::vector<const std::vector<std::int64_t>*>& extra) {
  std::string buf;
  buf.append(kMagic, sizeof kMagic);
  put<std::uint32_t>(buf, kBlockVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(table.column_count() + extra.size()));
  put<std::uint64_t>(buf, end - begin);
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    const Column& col = table.column(c);
    put<std::uint8_t>(buf, static_cast<std::uint8_t>(col.type()));
    for (std::size_t r = begin; r < end; ++r) {
      switch (col.type()) {
        case ColumnType::kInteger:
          put<std::int64_t>(buf, col.int_at(r));
          break;
        case ColumnType::kFloat:
          put<double>(buf, col.float_at(r));
          break;
        case ColumnType::kString: {
          const std::string& s = col.string_at(r);
          put<std::uint32_t>(buf, static_cast<std::uint32_t>(s.size()));
          buf += s;
          break;
        }
      }
    }
  }
  for (const auto* values : extra) {
    put<std::uint8_t>(buf, static_cast<std::uint8_t>(ColumnType::kInteger));
    for (std::size_t r = begin; r < end; ++r) put<std::int64_t>(buf, (*values)[r]);
  }

  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(ErrorKind::kIo, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
  return fnv1a(buf);
}

void read_block(const std::filesystem::path& path, std::uint64_t expected_checksum, Table& table,
                const std::vector<std::vector<std::int64_t>*>& extra) {
  const std::string buf = slurp(path);
  if (fnv1a(buf) != expected_checksum) {
    throw Error(ErrorKind::kCorrupt, "checksum mismatch for block " + path.string());
  }
  Reader in(buf, path);
  if (in.bytes(4) != std::string_view(kMagic, 4)) in.fail("bad magic");
  if (in.get<std::uint32_t>() != kBlockVersion) in.fail("unsupported block version");
  const auto ncols = in.get<std::uint32_t>();
  const auto nrows = in.get<std::uint64_t>();
  if (ncols != table.column_count() + extra.size()) in.fail("column count mismatch");
  for (std::size_t c = 0; c < ncols; ++c) {
    const auto type = static_cast<ColumnType>(in.get<std::uint8_t>());
    if (c >= table.column_count()) {
      if (type != ColumnType::kInteger) in.fail("extra column must be integer");
      auto& values = *extra[c - table.column_count()];
      for (std::uint64_t r = 0; r < nrows; ++r) values.push_back(in.get<std::int64_t>());
      continue;
    }
    Column& col = table.column(c);
    if (type != col.type()) in.fail("column type mismatch");
    for (std::uint64_t r = 0; r < nrows; ++r) {
      switch (type) {
        case ColumnType::kInteger:
          col.push_int(in.get<std::int64_t>());
          break;
        case ColumnType::kFloat:
          col.push_float(in.get<double>());
          break;
        case ColumnType::kString: {
          const auto len = in.get<std::uint32_t>();
          col.push_string(in.bytes(len));
          break;
        }
      }
    }
  }
  if (!in.done()) in.fail("trailing bytes");
}

std::uint64_t file_checksum(const std::filesystem::path& path) { return fnv1a(slurp(path)); }

}  // namespace aqe
