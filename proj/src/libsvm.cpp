#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <memory>

#include "catgrad/error.hpp"
#include "catgrad/problems.hpp"

namespace catgrad {

namespace {

struct GzCloser {
  void operator()(gzFile_s* f) const noexcept { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

// Reads one line without the trailing newline; false at end of file.
bool read_line(gzFile f, std::string& line) {
  line.clear();
  char buf[8192];
  while (gzgets(f, buf, sizeof buf) != nullptr) {
    line += buf;
    if (!line.empty() && line.back() == '\n') {
      line.pop_back();
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
  }
  return !line.empty();
}

[[noreturn]] void fail(const std::string& path, std::size_t lineno, const std::string& msg) {
  throw ParseError(path + ":" + std::to_string(lineno) + ": " + msg);
}

}  // namespace

Dataset load_libsvm(const std::string& path, std::optional<std::size_t> dim) {
  // gzopen also reads plain files.
  GzHandle f(gzopen(path.c_str(), "rb"));
  if (!f) throw Error("cannot open " + path + ": " + std::strerror(errno));

  struct Row {
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
  };
  std::vector<Row> rows;
  Vector labels;
  std::size_t max_index = 0;
  std::string line;
  std::size_t lineno = 0;

  while (read_line(f.get(), line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const char* p = line.c_str();
    while (*p == ' ' || *p == '\t') ++p;
    if (*p == '\0') continue;

    char* end = nullptr;
    const double raw = std::strtod(p, &end);
    if (end == p || (*end != ' ' && *end != '\t' && *end != '\0')) fail(path, lineno, "bad label");
    double label;
    if (raw == 1.0) {
      label = 1.0;
    } else if (raw == -1.0 || raw == 0.0) {
      label = -1.0;
    } else {
      fail(path, lineno, "label must be +1/-1 or 0/1, got " + std::string(p, static_cast<const char*>(end)));
    }
    p = end;

    Row row;
    while (true) {
      while (*p == ' ' || *p == '\t') ++p;
      if (*p == '\0') break;
      errno = 0;
      const long long j = std::strtoll(p, &end, 10);
      if (end == p || *end != ':' || errno != 0) fail(path, lineno, "expected index:value");
      if (j < 1 || j > 0xffffffffLL) fail(path, lineno, "index must be a positive 32-bit integer");
      p = end + 1;
      const double v = std::strtod(p, &end);
      if (end == p || (*end != ' ' && *end != '\t' && *end != '\0')) {
        fail(path, lineno, "bad feature value");
      }
      p = end;
      row.idx.push_back(static_cast<std::uint32_t>(j - 1));
      row.val.push_back(v);
      max_index = std::max<std::size_t>(max_index, static_cast<std::size_t>(j));
    }

    // Sort by index and reject duplicates.
    std::vector<std::size_t> perm(row.idx.size());
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
    std::sort(perm.begin(), perm.end(), [&](auto a, auto b) { return row.idx[a] < row.idx[b]; });
    Row sorted;
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
      const std::size_t k = perm[pos];
      if (pos > 0 && row.idx[perm[pos - 1]] == row.idx[k]) {
        fail(path, lineno, "duplicate feature index " + std::to_string(row.idx[k] + 1));
      }
      if (row.val[k] == 0.0) continue;
      sorted.idx.push_back(row.idx[k]);
      sorted.val.push_back(row.val[k]);
    }
    rows.push_back(std::move(sorted));
    labels.push_back(label);
  }

  if (int err = 0; gzerror(f.get(), &err) != nullptr && err != Z_OK && err != Z_STREAM_END) {
    throw Error("read error in " + path);
  }

  std::size_t cols = max_index;
  if (dim) {
    if (*dim < max_index) {
      throw ParseError(path + ": feature index " + std::to_string(max_index) +
                       " exceeds requested dimension " + std::to_string(*dim));
    }
    cols = *dim;
  }
  if (cols == 0) throw ParseError(path + ": no features");

  Dataset data{SparseMatrix(cols), std::move(labels)};
  for (const Row& r : rows) data.features.add_row(r.idx, r.val);
  return data;
}

}  // namespace catgrad
