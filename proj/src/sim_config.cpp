#include "chunkscope/sim_config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <string_view>

namespace chunkscope {

namespace {

struct Value {
  enum class Kind { integer, real, boolean, text, array };
  Kind kind = Kind::integer;
  std::int64_t i = 0;
  double f = 0;
  bool b = false;
  std::string s;
  std::vector<Value> arr;
  int line = 0;

  double as_real() const { return kind == Kind::integer ? static_cast<double>(i) : f; }
};

using Table = std::map<std::string, Value>;

struct Doc {
  Table root;
  std::map<std::string, Table> tables;
  std::map<std::string, std::vector<Table>> table_arrays;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

std::optional<Value> parse_scalar(std::string_view text, int line) {
  Value v;
  v.line = line;
  if (text == "true" || text == "false") {
    v.kind = Value::Kind::boolean;
    v.b = text == "true";
    return v;
  }
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    v.kind = Value::Kind::text;
    v.s = std::string(text.substr(1, text.size() - 2));
    return v;
  }
  const bool looks_real = text.find('.') != std::string_view::npos ||
                          text.find('e') != std::string_view::npos ||
                          text.find('E') != std::string_view::npos;
  if (looks_real) {
    try {
      size_t used = 0;
      const double parsed = std::stod(std::string(text), &used);
      if (used != text.size() || !std::isfinite(parsed)) return std::nullopt;
      v.kind = Value::Kind::real;
      v.f = parsed;
      return v;
    } catch (...) {
      return std::nullopt;
    }
  }
  std::int64_t parsed = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), parsed, 10);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  v.kind = Value::Kind::integer;
  v.i = parsed;
  return v;
}

std::optional<Value> parse_value(std::string_view text, int line) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '[') {
    if (text.back() != ']') return std::nullopt;
    Value v;
    v.kind = Value::Kind::array;
    v.line = line;
    std::string_view body = trim(text.substr(1, text.size() - 2));
    if (body.empty()) return v;
    size_t start = 0;
    while (start <= body.size()) {
      size_t comma = body.find(',', start);
      std::string_view item =
          comma == std::string_view::npos ? body.substr(start) : body.substr(start, comma - start);
      auto parsed = parse_scalar(trim(item), line);
      if (!parsed) return std::nullopt;
      v.arr.push_back(std::move(*parsed));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return v;
  }
  return parse_scalar(text, line);
}

std::variant<Doc, ConfigError> parse_doc(const std::string &text) {
  Doc doc;
  Table *current = &doc.root;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view raw(text.data() + pos, (eol == std::string::npos ? text.size() : eol) - pos);
    pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    // Strip comments outside quotes.
    std::string no_comment;
    bool in_quote = false;
    for (char c : raw) {
      if (c == '"') in_quote = !in_quote;
      if (c == '#' && !in_quote) break;
      no_comment += c;
    }
    std::string_view stripped = trim(no_comment);
    if (stripped.empty()) continue;

    if (stripped.front() == '[') {
      const bool is_array = stripped.size() >= 4 && stripped[1] == '[';
      const std::string_view closer = is_array ? "]]" : "]";
      if (stripped.substr(stripped.size() - closer.size()) != closer) {
        return ConfigError{"unterminated table header", line_no};
      }
      std::string_view name =
          trim(stripped.substr(is_array ? 2 : 1, stripped.size() - 2 * (is_array ? 2 : 1)));
      if (!valid_key(name)) return ConfigError{"invalid table name", line_no};
      if (is_array) {
        auto &list = doc.table_arrays[std::string(name)];
        list.emplace_back();
        current = &list.back();
      } else {
        auto [it, inserted] = doc.tables.try_emplace(std::string(name));
        if (!inserted) return ConfigError{"duplicate table [" + std::string(name) + "]", line_no};
        current = &it->second;
      }
      continue;
    }

    size_t eq = std::string_view::npos;
    in_quote = false;
    for (size_t i = 0; i < stripped.size(); ++i) {
      if (stripped[i] == '"') in_quote = !in_quote;
      if (stripped[i] == '=' && !in_quote) {
        eq = i;
        break;
      }
    }
    if (eq == std::string_view::npos) return ConfigError{"expected key = value", line_no};
    std::string_view key = trim(stripped.substr(0, eq));
    if (!valid_key(key)) return ConfigError{"invalid key name", line_no};
    auto value = parse_value(stripped.substr(eq + 1), line_no);
    if (!value) return ConfigError{"invalid value for key '" + std::string(key) + "'", line_no};
    auto [it, inserted] = current->try_emplace(std::string(key), std::move(*value));
    if (!inserted) return ConfigError{"duplicate key '" + std::string(key) + "'", line_no};
  }
  return doc;
}

// Tracks which keys a table consumed so leftovers can be reported.
class Cursor {
public:
  Cursor(const Table &table, std::string context, std::optional<ConfigError> &error)
      : table_(table), context_(std::move(context)), error_(error) {}

  std::int64_t integer(const std::string &key, std::int64_t fallback) {
    const Value *v = fetch(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::integer) {
      fail(key, "expected an integer", v->line);
      return fallback;
    }
    return v->i;
  }

  double real(const std::string &key, double fallback) {
    const Value *v = fetch(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::real && v->kind != Value::Kind::integer) {
      fail(key, "expected a number", v->line);
      return fallback;
    }
    return v->as_real();
  }

  bool boolean(const std::string &key, bool fallback) {
    const Value *v = fetch(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::boolean) {
      fail(key, "expected true/false", v->line);
      return fallback;
    }
    return v->b;
  }

  std::string text(const std::string &key, std::string fallback) {
    const Value *v = fetch(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::text) {
      fail(key, "expected a quoted string", v->line);
      return fallback;
    }
    return v->s;
  }

  std::vector<double> numbers(const std::string &key, std::vector<double> fallback) {
    const Value *v = fetch(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::array) {
      fail(key, "expected an array", v->line);
      return fallback;
    }
    std::vector<double> out;
    for (const auto &item : v->arr) {
      if (item.kind != Value::Kind::integer && item.kind != Value::Kind::real) {
        fail(key, "expected numeric array elements", v->line);
        return fallback;
      }
      out.push_back(item.as_real());
    }
    return out;
  }

  void finish() {
    if (error_) return;
    for (const auto &[key, value] : table_) {
      if (!used_.count(key)) {
        error_ = ConfigError{"unknown key '" + key + "' in " + context_, value.line};
        return;
      }
    }
  }

private:
  const Value *fetch(const std::string &key) {
    auto it = table_.find(key);
    if (it == table_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  void fail(const std::string &key, const std::string &what, int line) {
    if (!error_) error_ = ConfigError{what + " for '" + key + "' in " + context_, line};
  }

  const Table &table_;
  std::string context_;
  std::optional<ConfigError> &error_;
  std::set<std::string> used_;
};

PathProfile parse_path(const Table &table, size_t index, std::optional<ConfigError> &error) {
  PathProfile p;
  Cursor cur(table, "[[path]] #" + std::to_string(index + 1), error);
  p.name = cur.text("name", "path-" + std::to_string(index + 1));
  p.org_label = cur.text("org_label", p.name);
  p.weight = cur.real("weight", p.weight);
  p.n_prefixes = static_cast<int>(cur.integer("n_prefixes", p.n_prefixes));
  p.prefix_base = cur.text("prefix_base", p.prefix_base);
  p.base_rtt_ms = cur.real("base_rtt_ms", p.base_rtt_ms);
  p.jitter_ms = cur.real("jitter_ms", p.jitter_ms);
  p.spike_prob = cur.real("spike_prob", p.spike_prob);
  p.spike_min_ms = cur.real("spike_min_ms", p.spike_min_ms);
  p.spike_max_ms = cur.real("spike_max_ms", p.spike_max_ms);
  p.loss_rate = cur.real("loss_rate", p.loss_rate);
  p.rto_timeout_prob = cur.real("rto_timeout_prob", p.rto_timeout_prob);
  p.bandwidth_bytes_per_s = cur.real("bandwidth_bytes_per_s", p.bandwidth_bytes_per_s);
  p.distance_km = cur.real("distance_km", p.distance_km);
  cur.finish();
  return p;
}

ClientProfile parse_client(const Table &table, size_t index, std::optional<ConfigError> &error) {
  ClientProfile c;
  Cursor cur(table, "[[client]] #" + std::to_string(index + 1), error);
  c.label = cur.text("label", "OS/Browser-" + std::to_string(index + 1));
  c.weight = cur.real("weight", c.weight);
  c.ds_fault_rate = cur.real("ds_fault_rate", c.ds_fault_rate);
  c.ds_delay_median_ms = cur.real("ds_delay_median_ms", c.ds_delay_median_ms);
  c.ds_delay_sigma = cur.real("ds_delay_sigma", c.ds_delay_sigma);
  c.vis_rate = cur.real("vis_rate", c.vis_rate);
  c.fps = cur.real("fps", c.fps);
  c.drop_base = cur.real("drop_base", c.drop_base);
  c.drop_at_rate1 = cur.real("drop_at_rate1", c.drop_at_rate1);
  c.drop_at_rate15 = cur.real("drop_at_rate15", c.drop_at_rate15);
  c.drop_noise = cur.real("drop_noise", c.drop_noise);
  c.cpu_overload_prob = cur.real("cpu_overload_prob", c.cpu_overload_prob);
  c.overload_drop_min = cur.real("overload_drop_min", c.overload_drop_min);
  c.overload_drop_max = cur.real("overload_drop_max", c.overload_drop_max);
  cur.finish();
  return c;
}

} // namespace

SimConfig default_sim_config() {
  SimConfig c;

  // Loss rates sized so roughly 40% of sessions see no retransmission at all;
  // every path carries a small heavy-tail delay-spike probability, which is
  // what real queueing delay distributions look like.
  c.paths = {
      {"res-east", "Residential-ISP-A", 0.40, 8, "23.112.0.0", 25.0, 8.0, 0.0008, 100.0, 600.0,
       4e-5, 0.3, 6e6, 350.0},
      {"res-west", "Residential-ISP-B", 0.32, 8, "67.41.0.0", 60.0, 4.0, 0.0008, 100.0, 600.0,
       4e-5, 0.3, 5e6, 2800.0},
      {"enterprise-1", "Enterprise-1", 0.05, 4, "198.51.100.0", 40.0, 10.0, 0.09, 250.0, 1500.0,
       8e-5, 0.3, 2.5e6, 40.0},
      {"enterprise-2", "Enterprise-2", 0.04, 4, "203.0.113.0", 35.0, 8.0, 0.08, 250.0, 1500.0,
       8e-5, 0.3, 2.5e6, 25.0},
      {"far-intl", "Intl-ISP-C", 0.12, 6, "185.60.112.0", 150.0, 10.0, 0.0008, 100.0, 800.0,
       1e-4, 0.3, 1.5e6, 9000.0},
      {"dsl-limited", "Residential-DSL-D", 0.07, 4, "98.158.96.0", 45.0, 6.0, 0.0003, 100.0, 800.0,
       1.2e-4, 0.3, 4.5e5, 1200.0},
  };

  auto client = [](std::string label, double weight, double ds_median, double overload,
                   double base) {
    ClientProfile p;
    p.label = std::move(label);
    p.weight = weight;
    p.ds_fault_rate = 0.003;
    p.ds_delay_median_ms = ds_median;
    p.ds_delay_sigma = 0.45;
    p.cpu_overload_prob = overload;
    p.drop_base = base;
    return p;
  };
  c.clients = {
      client("Windows/Chrome", 0.40, 1400.0, 0.06, 0.02),
      client("Windows/Firefox", 0.33, 1500.0, 0.09, 0.03),
      client("Windows/IE", 0.12, 1500.0, 0.10, 0.04),
      client("Mac/Safari", 0.05, 1300.0, 0.04, 0.015),
      client("Mac/Chrome", 0.04, 1400.0, 0.05, 0.02),
      client("Windows/Safari", 0.02, 1800.0, 0.25, 0.10),
      client("Windows/Other", 0.04, 1700.0, 0.20, 0.08),
  };
  return c;
}

std::optional<std::string> validate_sim_config(const SimConfig &c) {
  auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (c.n_videos < 10) return "n_videos must be >= 10";
  if (c.n_sessions < 0) return "n_sessions must be >= 0";
  if (c.chunks_min < 1 || c.chunks_max < c.chunks_min) {
    return "chunks_min/chunks_max must satisfy 1 <= min <= max";
  }
  if (c.chunk_duration_s <= 0) return "chunk_duration_s must be positive";
  if (c.startup_buffer_s <= 0) return "startup_buffer_s must be positive";
  if (c.bitrate_ladder_kbps.empty()) return "bitrate_ladder_kbps must be non-empty";
  for (size_t i = 0; i < c.bitrate_ladder_kbps.size(); ++i) {
    if (c.bitrate_ladder_kbps[i] <= 0) return "bitrate ladder entries must be positive";
    if (i > 0 && c.bitrate_ladder_kbps[i] <= c.bitrate_ladder_kbps[i - 1]) {
      return "bitrate ladder must be sorted ascending";
    }
  }
  if (c.iw_segments < 1) return "iw_segments must be >= 1";
  if (c.mss <= 0) return "mss must be positive";
  if (c.n_days < 1) return "n_days must be >= 1";
  if (c.n_pops < 1 || c.n_servers < 1) return "n_pops and n_servers must be >= 1";
  if (c.snapshot_interval_ms <= 0) return "snapshot_interval_ms must be positive";
  if (c.first_chunk_loss_multiplier < 0) return "first_chunk_loss_multiplier must be >= 0";
  if (c.cache.memory_entries < 1 || c.cache.disk_entries < 1) {
    return "cache entry counts must be >= 1";
  }
  if (c.cdn.async_read_timer_ms < 0 || c.cdn.wait_max_ms < 0 || c.cdn.open_max_ms < 0 ||
      c.cdn.read_median_ms <= 0 || c.cdn.read_fast_median_ms <= 0 || c.cdn.disk_window_ms < 0 ||
      c.cdn.read_fast_fraction < 0 || c.cdn.read_fast_fraction > 1) {
    return "cdn latency parameters out of range";
  }
  if (c.backend.base_ms <= 0 || c.backend.sigma < 0 || c.backend.shift_ms < 0) {
    return "backend latency parameters out of range";
  }
  if (c.zipf_exponent < 0) return "zipf_exponent must be >= 0";
  if (c.paths.empty()) return "at least one [[path]] profile is required";
  if (c.clients.empty()) return "at least one [[client]] profile is required";
  for (const auto &p : c.paths) {
    if (p.weight <= 0) return "path weight must be positive (" + p.name + ")";
    if (p.n_prefixes < 1) return "path n_prefixes must be >= 1 (" + p.name + ")";
    if (!rate_ok(p.spike_prob) || !rate_ok(p.loss_rate) || !rate_ok(p.rto_timeout_prob)) {
      return "path rates must be in [0,1] (" + p.name + ")";
    }
    if (p.base_rtt_ms <= 0 || p.jitter_ms < 0 || p.spike_min_ms < 0 ||
        p.spike_max_ms < p.spike_min_ms) {
      return "path latency parameters out of range (" + p.name + ")";
    }
    if (p.bandwidth_bytes_per_s <= 0) return "path bandwidth must be positive (" + p.name + ")";
    if (p.distance_km < 0) return "path distance_km must be >= 0 (" + p.name + ")";
  }
  for (const auto &p : c.clients) {
    if (p.weight <= 0) return "client weight must be positive (" + p.label + ")";
    if (!rate_ok(p.ds_fault_rate) || !rate_ok(p.vis_rate) || !rate_ok(p.cpu_overload_prob)) {
      return "client rates must be in [0,1] (" + p.label + ")";
    }
    if (p.ds_delay_median_ms <= 0 || p.ds_delay_sigma < 0) {
      return "client ds delay parameters out of range (" + p.label + ")";
    }
    if (p.fps <= 0) return "client fps must be positive (" + p.label + ")";
    for (double frac : {p.drop_base, p.drop_at_rate1, p.drop_at_rate15, p.overload_drop_min,
                        p.overload_drop_max}) {
      if (!rate_ok(frac)) return "client drop fractions must be in [0,1] (" + p.label + ")";
    }
    if (p.overload_drop_max < p.overload_drop_min) {
      return "client overload drop range inverted (" + p.label + ")";
    }
    if (p.drop_noise < 0 || p.drop_noise > 0.5) return "client drop_noise out of range";
  }
  return std::nullopt;
}

std::variant<SimConfig, ConfigError> parse_sim_config(const std::string &text) {
  auto parsed = parse_doc(text);
  if (std::holds_alternative<ConfigError>(parsed)) return std::get<ConfigError>(parsed);
  const Doc &doc = std::get<Doc>(parsed);

  std::optional<ConfigError> error;
  SimConfig config = default_sim_config();

  Cursor root(doc.root, "top level", error);
  config.seed = static_cast<std::uint64_t>(root.integer("seed", static_cast<std::int64_t>(config.seed)));
  config.n_videos = root.integer("n_videos", config.n_videos);
  config.zipf_exponent = root.real("zipf_exponent", config.zipf_exponent);
  config.n_sessions = root.integer("n_sessions", config.n_sessions);
  config.chunks_min = root.integer("chunks_min", config.chunks_min);
  config.chunks_max = root.integer("chunks_max", config.chunks_max);
  config.chunk_duration_s = root.real("chunk_duration_s", config.chunk_duration_s);
  config.bitrate_ladder_kbps = root.numbers("bitrate_ladder_kbps", config.bitrate_ladder_kbps);
  config.startup_buffer_s = root.real("startup_buffer_s", config.startup_buffer_s);
  config.iw_segments = root.integer("iw_segments", config.iw_segments);
  config.mss = root.integer("mss", config.mss);
  config.n_days = root.integer("n_days", config.n_days);
  config.n_pops = root.integer("n_pops", config.n_pops);
  config.n_servers = root.integer("n_servers", config.n_servers);
  config.snapshot_interval_ms = root.real("snapshot_interval_ms", config.snapshot_interval_ms);
  config.first_chunk_loss_multiplier =
      root.real("first_chunk_loss_multiplier", config.first_chunk_loss_multiplier);
  config.first_chunk_ds_enabled =
      root.boolean("first_chunk_ds_enabled", config.first_chunk_ds_enabled);
  config.first_chunk_ds_median_ms =
      root.real("first_chunk_ds_median_ms", config.first_chunk_ds_median_ms);
  config.first_chunk_ds_sigma = root.real("first_chunk_ds_sigma", config.first_chunk_ds_sigma);
  config.prewarm_cache = root.boolean("prewarm_cache", config.prewarm_cache);
  root.finish();

  for (const auto &[name, table] : doc.tables) {
    if (error) break;
    if (name == "cache") {
      Cursor cur(table, "[cache]", error);
      config.cache.memory_entries = cur.integer("memory_entries", config.cache.memory_entries);
      config.cache.disk_entries = cur.integer("disk_entries", config.cache.disk_entries);
      cur.finish();
    } else if (name == "cdn") {
      Cursor cur(table, "[cdn]", error);
      config.cdn.async_read_timer_ms =
          cur.real("async_read_timer_ms", config.cdn.async_read_timer_ms);
      config.cdn.wait_max_ms = cur.real("wait_max_ms", config.cdn.wait_max_ms);
      config.cdn.open_max_ms = cur.real("open_max_ms", config.cdn.open_max_ms);
      config.cdn.read_fast_fraction = cur.real("read_fast_fraction", config.cdn.read_fast_fraction);
      config.cdn.read_fast_median_ms =
          cur.real("read_fast_median_ms", config.cdn.read_fast_median_ms);
      config.cdn.read_fast_sigma = cur.real("read_fast_sigma", config.cdn.read_fast_sigma);
      config.cdn.read_median_ms = cur.real("read_median_ms", config.cdn.read_median_ms);
      config.cdn.read_sigma = cur.real("read_sigma", config.cdn.read_sigma);
      config.cdn.disk_window_ms = cur.real("disk_window_ms", config.cdn.disk_window_ms);
      cur.finish();
    } else if (name == "backend") {
      Cursor cur(table, "[backend]", error);
      config.backend.base_ms = cur.real("base_ms", config.backend.base_ms);
      config.backend.sigma = cur.real("sigma", config.backend.sigma);
      config.backend.shift_ms = cur.real("shift_ms", config.backend.shift_ms);
      cur.finish();
    } else {
      error = ConfigError{"unknown table [" + name + "]", 0};
    }
  }

  for (const auto &[name, tables] : doc.table_arrays) {
    if (error) break;
    if (name == "path") {
      config.paths.clear();
      for (size_t i = 0; i < tables.size() && !error; ++i) {
        config.paths.push_back(parse_path(tables[i], i, error));
      }
    } else if (name == "client") {
      config.clients.clear();
      for (size_t i = 0; i < tables.size() && !error; ++i) {
        config.clients.push_back(parse_client(tables[i], i, error));
      }
    } else {
      error = ConfigError{"unknown table array [[" + name + "]]", 0};
    }
  }

  if (error) return *error;
  if (auto problem = validate_sim_config(config)) return ConfigError{*problem, 0};
  return config;
}

std::string config_fingerprint(const std::string &text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

} // namespace chunkscope
