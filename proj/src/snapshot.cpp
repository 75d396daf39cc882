#include "qarena/snapshot.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace qarena {
namespace {

constexpr char kMagic[4] = {'Q', 'A', 'R', 'N'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    out_.append(static_cast<const char*>(data), n);
  }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& data, std::size_t end) : data_(data), end_(end) {}

  template <typename T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) throw Error("corrupt", "snapshot truncated");
  }

  const std::string& data_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string io_detail(const std::filesystem::path& path, const char* what) {
  return path.string() + ": " + what + " (" + std::strerror(errno) + ")";
}

}  // namespace

std::string encode_snapshot(const QTable& q) {
  std::vector<const QTable::Entries::value_type*> sorted;
  sorted.reserve(q.size());
  for (const auto& entry : q.entries()) sorted.push_back(&entry);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });

  Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint16_t>(kSnapshotVersion);
  w.uint<std::uint8_t>(static_cast<std::uint8_t>(q.game()));
  w.uint<std::uint8_t>(0);
  w.f64(q.alpha());
  w.f64(q.gamma());
  w.f64(q.epsilon());
  w.uint<std::uint64_t>(q.episodes_trained());
  w.uint<std::uint64_t>(sorted.size());
  for (const auto* entry : sorted) {
    const std::string& key = entry->first.bytes();
    w.uint<std::uint16_t>(static_cast<std::uint16_t>(key.size()));
    w.bytes(key.data(), key.size());
    w.uint<std::uint16_t>(static_cast<std::uint16_t>(entry->second.size()));
    for (double v : entry->second) w.f64(v);
  }
  w.uint<std::uint32_t>(crc32_of(w.str().data(), w.str().size()));
  return std::move(w.str());
}

QTable decode_snapshot(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error("bad_magic", "not a snapshot file");
  }
  Reader header(bytes, bytes.size());
  header.bytes(4);
  const auto version = header.uint<std::uint16_t>();
  if (version != kSnapshotVersion) {
    throw Error("unsupported_version", "snapshot version " + std::to_string(version));
  }
  if (bytes.size() < 4 + 2 + 2 + 24 + 16 + 4) throw Error("corrupt", "snapshot truncated");
  const std::size_t body = bytes.size() - 4;
  Reader crc_reader(bytes, bytes.size());
  crc_reader.bytes(body);
  if (crc_reader.uint<std::uint32_t>() != crc32_of(bytes.data(), body)) {
    throw Error("corrupt", "checksum mismatch");
  }

  Reader r(bytes, body);
  r.bytes(6);
  const auto game_byte = r.uint<std::uint8_t>();
  if (game_byte > static_cast<std::uint8_t>(GameId::Mancala)) {
    throw Error("corrupt", "unknown game id " + std::to_string(game_byte));
  }
  r.uint<std::uint8_t>();
  const double alpha = r.f64();
  const double gamma = r.f64();
  const double epsilon = r.f64();
  const auto episodes = r.uint<std::uint64_t>();
  const auto count = r.uint<std::uint64_t>();
  QTable q(static_cast<GameId>(game_byte), alpha, gamma);
  q.set_epsilon(epsilon);
  q.set_episodes_trained(episodes);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto key_len = r.uint<std::uint16_t>();
    std::string key = r.bytes(key_len);
    const auto n = r.uint<std::uint16_t>();
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64();
    q.insert(StateKey(std::move(key)), std::move(values));
  }
  if (r.pos() != body || q.size() != count) throw Error("corrupt", "trailing or duplicate entries");
  return q;
}

void save_snapshot(const QTable& q, const std::filesystem::path& path) {
  const std::string data = encode_snapshot(q);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error("io_error", io_detail(tmp, "open failed"));
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string detail = io_detail(tmp, "write failed");
      ::close(fd);
      throw Error("io_error", detail);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    const std::string detail = io_detail(tmp, "fsync failed");
    ::close(fd);
    throw Error("io_error", detail);
  }
  ::close(fd);
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("io_error", path.string() + ": rename failed (" + ec.message() + ")");
}

QTable load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_snapshot(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string snapshot_file_name(std::uint64_t episode) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "ep_%010llu.qsnap", static_cast<unsigned long long>(episode));
  return buf;
}

std::string fs_snapshot_file_name(std::uint64_t episode) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "fs_ep_%010llu.qsnap", static_cast<unsigned long long>(episode));
  return buf;
}

std::string manifest_text(const TrainingRun& run) {
  const TrainConfig& c = run.config;
  std::ostringstream out;
  out << "game=" << game_name(c.game) << '\n';
  out << "teacher=" << c.teacher.to_string() << '\n';
  out << "evaluator=" << c.resolved_evaluator().to_string() << '\n';
  out << "alpha=" << format_double(c.alpha) << '\n';
  out << "gamma=" << format_double(c.gamma) << '\n';
  out << "epsilon=" << format_double(c.epsilon) << '\n';
  if (c.epsilon_final) out << "epsilon_final=" << format_double(*c.epsilon_final) << '\n';
  out << "reward_win=" << format_double(c.rewards.win) << '\n';
  out << "reward_loss=" << format_double(c.rewards.loss) << '\n';
  out << "reward_draw=" << format_double(c.rewards.draw) << '\n';
  out << "max_episodes=" << c.max_episodes << '\n';
  out << "eval_every=" << c.eval_every << '\n';
  out << "eval_games=" << c.eval_games << '\n';
  out << "snapshot_every=" << c.effective_snapshot_every() << '\n';
  out << "seed=" << c.seed << '\n';
  out << "st_window=" << c.st_window << '\n';
  out << "st_tolerance=" << c.st_tolerance << '\n';
  out << "fs_window=" << c.fs_window << '\n';
  out << "fs_confirm=" << c.fs_confirm << '\n';
  out << "episodes_run=" << run.episodes_run << '\n';
  out << "converged=" << (run.convergence_fs ? "true" : "false") << '\n';
  out << "convergence_st=" << (run.convergence_st ? std::to_string(*run.convergence_st) : "none")
      << '\n';
  out << "convergence_fs=" << (run.convergence_fs ? std::to_string(*run.convergence_fs) : "none")
      << '\n';
  out << "fs_snapshot=" << run.fs_snapshot.value_or("none") << '\n';
  out << "curve=curve.csv\n";
  for (const auto& s : run.snapshots) out << "snapshot." << s.episode << '=' << s.file << '\n';
  return out.str();
}

void write_run_files(const TrainingRun& run) {
  const auto& dir = run.config.out_dir;
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error("io_error", (dir / name).string() + ": write failed");
  };
  write("curve.csv", curve_csv(run.curve));
  write("manifest.txt", manifest_text(run));
}

TrainingRun read_run(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw Error("run_not_found", (dir / "manifest.txt").string() + ": cannot open");
  std::map<std::string, std::string> kv;
  TrainingRun run;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("bad_manifest", "line without '=': " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key.starts_with("snapshot.")) {
      run.snapshots.push_back({std::stoull(key.substr(9)), value});
    } else {
      kv[key] = value;
    }
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error("bad_manifest", "missing key '" + key + "'");
    return it->second;
  };
  auto optional_u64 = [&](const std::string& key) -> std::optional<std::uint64_t> {
    const std::string& v = get(key);
    if (v == "none") return std::nullopt;
    return std::stoull(v);
  };
  try {
    TrainConfig& c = run.config;
    c.game = parse_game(get("game"));
    c.teacher = AgentSpec::parse(get("teacher"));
    c.evaluator = AgentSpec::parse(get("evaluator"));
    c.alpha = std::stod(get("alpha"));
    c.gamma = std::stod(get("gamma"));
    c.epsilon = std::stod(get("epsilon"));
    if (kv.contains("epsilon_final")) c.epsilon_final = std::stod(kv["epsilon_final"]);
    c.rewards = {std::stod(get("reward_win")), std::stod(get("reward_loss")),
                 std::stod(get("reward_draw"))};
    c.max_episodes = std::stoull(get("max_episodes"));
    c.eval_every = std::stoull(get("eval_every"));
    c.eval_games = std::stoull(get("eval_games"));
    c.snapshot_every = std::stoull(get("snapshot_every"));
    c.seed = std::stoull(get("seed"));
    c.st_window = std::stoi(get("st_window"));
    c.st_tolerance = std::stoi(get("st_tolerance"));
    c.fs_window = std::stoi(get("fs_window"));
    c.fs_confirm = std::stoull(get("fs_confirm"));
    c.out_dir = dir;
    run.episodes_run = std::stoull(get("episodes_run"));
    run.convergence_st = optional_u64("convergence_st");
    run.convergence_fs = optional_u64("convergence_fs");
    if (get("fs_snapshot") != "none") run.fs_snapshot = get("fs_snapshot");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("bad_manifest", (dir / "manifest.txt").string() + ": " + e.what());
  }
  std::sort(run.snapshots.begin(), run.snapshots.end(),
            [](const SnapshotRef& a, const SnapshotRef& b) { return a.episode < b.episode; });
  run.dir = dir;
  std::ifstream curve(dir / "curve.csv");
  if (curve) {
    std::ostringstream buf;
    buf << curve.rdbuf();
    run.curve = parse_curve_csv(buf.str());
  }
  return run;
}

ResolvedSnapshot resolve_percent(const TrainingRun& run, double percent) {
  if (!run.convergence_fs) {
    throw Error("run_not_converged", run.dir.string() + " has no convergence-FS episode");
  }
  if (!(percent > 0.0 && percent <= 100.0)) throw Error("bad_percent", "percent must be in (0, 100]");
  ResolvedSnapshot out;
  out.target = static_cast<std::uint64_t>(
      std::llround(percent / 100.0 * static_cast<double>(*run.convergence_fs)));
  const SnapshotRef* best = nullptr;
  std::uint64_t best_gap = 0;
  for (const auto& s : run.snapshots) {
    const std::uint64_t gap = s.episode > out.target ? s.episode - out.target : out.target - s.episode;
    // Snapshots are ascending, so a strict comparison keeps the earlier one on ties.
    if (!best || gap < best_gap) {
      best = &s;
      best_gap = gap;
    }
  }
  const std::uint64_t limit = 2 * run.config.effective_snapshot_every();
  if (!best || best_gap > limit) {
    throw Error("snapshot_gap", "no snapshot within " + std::to_string(limit) + " episodes of " +
                                    std::to_string(out.target));
  }
  out.episode = best->episode;
  out.path = run.dir / best->file;
  return out;
}

AgentSpec percent_agent(const TrainingRun& run, double percent) {
  AgentSpec spec;
  spec.kind = AgentKind::QGreedy;
  spec.source = resolve_percent(run, percent).path.string();
  return spec;
}

}  // namespace qarena
