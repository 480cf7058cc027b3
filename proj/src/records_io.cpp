#include "chunkscope/records_io.hpp"

#include <json.hpp>

namespace chunkscope {

using nlohmann::json;

namespace {

json ms(micros_t us) { return us_to_ms(us); }

// Typed field access; returns nullopt on missing key or wrong type so a
// malformed line rejects as a unit.
std::optional<double> get_num(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) return std::nullopt;
  return it->get<double>();
}

std::optional<micros_t> get_ms(const json &j, const char *key) {
  auto v = get_num(j, key);
  if (!v) return std::nullopt;
  return ms_to_us(*v);
}

std::optional<std::int64_t> get_int(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) return std::nullopt;
  return it->get<std::int64_t>();
}

std::optional<std::string> get_str(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

std::optional<bool> get_bool(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) return std::nullopt;
  return it->get<bool>();
}

std::optional<json> parse_line(const std::string &line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

json snapshot_body(const TcpSnapshot &s) {
  return json{{"t_offset", ms(s.t_offset)}, {"cwnd", s.cwnd},   {"srtt", ms(s.srtt)},
              {"srttvar", ms(s.srttvar)},   {"retx", s.retx},   {"mss", s.mss}};
}

std::optional<TcpSnapshot> snapshot_from_body(const json &j) {
  TcpSnapshot s;
  auto t_offset = get_ms(j, "t_offset");
  auto cwnd = get_int(j, "cwnd");
  auto srtt = get_ms(j, "srtt");
  auto srttvar = get_ms(j, "srttvar");
  auto retx = get_int(j, "retx");
  auto mss = get_int(j, "mss");
  if (!t_offset || !cwnd || !srtt || !srttvar || !retx || !mss) return std::nullopt;
  if (*srtt <= 0 || *srttvar < 0 || *cwnd < 1) return std::nullopt;
  s.t_offset = *t_offset;
  s.cwnd = static_cast<int>(*cwnd);
  s.srtt = *srtt;
  s.srttvar = *srttvar;
  s.retx = *retx;
  s.mss = static_cast<int>(*mss);
  return s;
}

json evidence_json(const std::map<std::string, double> &m) {
  json out = json::object();
  for (const auto &[k, v] : m) out[k] = v;
  return out;
}

std::optional<std::map<std::string, double>> evidence_from(const json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_object()) return std::nullopt;
  std::map<std::string, double> out;
  for (const auto &[k, v] : it->items()) {
    if (!v.is_number()) return std::nullopt;
    out[k] = v.get<double>();
  }
  return out;
}

} // namespace

std::string to_jsonl(const PlayerChunkRecord &rec) {
  json j{{"session_id", rec.session_id},
         {"chunk_id", rec.chunk_id},
         {"d_fb", ms(rec.d_fb)},
         {"d_lb", ms(rec.d_lb)},
         {"bitrate", rec.bitrate_kbps},
         {"buf_count", rec.buf_count},
         {"buf_dur", ms(rec.buf_dur)},
         {"vis", rec.vis},
         {"avg_fr", rec.avg_fr},
         {"drop_fr", rec.drop_fr}};
  return j.dump();
}

std::optional<PlayerChunkRecord> player_from_jsonl(const std::string &line) {
  auto j = parse_line(line);
  if (!j) return std::nullopt;
  PlayerChunkRecord r;
  auto session = get_str(*j, "session_id");
  auto chunk = get_int(*j, "chunk_id");
  auto d_fb = get_ms(*j, "d_fb");
  auto d_lb = get_ms(*j, "d_lb");
  auto bitrate = get_num(*j, "bitrate");
  auto buf_count = get_int(*j, "buf_count");
  auto buf_dur = get_ms(*j, "buf_dur");
  auto vis = get_bool(*j, "vis");
  auto avg_fr = get_num(*j, "avg_fr");
  auto drop_fr = get_int(*j, "drop_fr");
  if (!session || !chunk || !d_fb || !d_lb || !bitrate || !buf_count || !buf_dur || !vis ||
      !avg_fr || !drop_fr) {
    return std::nullopt;
  }
  if (*chunk < 1 || *d_fb < 0 || *d_lb < 0 || *drop_fr < 0 || *avg_fr < 0) return std::nullopt;
  if (*buf_count == 0 && *buf_dur != 0) return std::nullopt;
  r.session_id = *session;
  r.chunk_id = static_cast<int>(*chunk);
  r.d_fb = *d_fb;
  r.d_lb = *d_lb;
  r.bitrate_kbps = *bitrate;
  r.buf_count = static_cast<int>(*buf_count);
  r.buf_dur = *buf_dur;
  r.vis = *vis;
  r.avg_fr = *avg_fr;
  r.drop_fr = static_cast<int>(*drop_fr);
  return r;
}

std::string to_jsonl(const CdnChunkRecord &rec) {
  json j{{"session_id", rec.session_id},
         {"chunk_id", rec.chunk_id},
         {"d_wait", ms(rec.d_wait)},
         {"d_open", ms(rec.d_open)},
         {"d_read", ms(rec.d_read)},
         {"d_be", ms(rec.d_be)},
         {"cache_status", to_string(rec.cache_status)},
         {"chunk_size", rec.chunk_size}};
  return j.dump();
}

std::optional<CdnChunkRecord> cdn_from_jsonl(const std::string &line) {
  auto j = parse_line(line);
  if (!j) return std::nullopt;
  CdnChunkRecord r;
  auto session = get_str(*j, "session_id");
  auto chunk = get_int(*j, "chunk_id");
  auto d_wait = get_ms(*j, "d_wait");
  auto d_open = get_ms(*j, "d_open");
  auto d_read = get_ms(*j, "d_read");
  auto d_be = get_ms(*j, "d_be");
  auto status_text = get_str(*j, "cache_status");
  auto size = get_int(*j, "chunk_size");
  if (!session || !chunk || !d_wait || !d_open || !d_read || !d_be || !status_text || !size) {
    return std::nullopt;
  }
  auto status = parse_cache_status(*status_text);
  if (!status) return std::nullopt;
  if (*chunk < 1 || *d_wait < 0 || *d_open < 0 || *d_read < 0 || *d_be < 0 || *size < 0) {
    return std::nullopt;
  }
  if (*status != CacheStatus::miss && *d_be != 0) return std::nullopt;
  r.session_id = *session;
  r.chunk_id = static_cast<int>(*chunk);
  r.d_wait = *d_wait;
  r.d_open = *d_open;
  r.d_read = *d_read;
  r.d_be = *d_be;
  r.cache_status = *status;
  r.chunk_size = *size;
  return r;
}

std::string to_jsonl(const TcpSnapshot &rec) {
  json j = snapshot_body(rec);
  j["session_id"] = rec.session_id;
  j["chunk_id"] = rec.chunk_id;
  return j.dump();
}

std::optional<TcpSnapshot> snapshot_from_jsonl(const std::string &line) {
  auto j = parse_line(line);
  if (!j) return std::nullopt;
  auto session = get_str(*j, "session_id");
  auto chunk = get_int(*j, "chunk_id");
  if (!session || !chunk || *chunk < 1) return std::nullopt;
  auto s = snapshot_from_body(*j);
  if (!s) return std::nullopt;
  s->session_id = *session;
  s->chunk_id = static_cast<int>(*chunk);
  return s;
}

std::string to_jsonl(const SessionMeta &rec) {
  json j{{"session_id", rec.session_id},
         {"client_ip", rec.client_ip},
         {"user_agent", rec.user_agent},
         {"cdn_client_ip", rec.cdn_client_ip},
         {"cdn_user_agent", rec.cdn_user_agent},
         {"video_length", rec.video_length_s},
         {"chunk_duration", rec.chunk_duration_s},
         {"pop_id", rec.pop_id},
         {"server_id", rec.server_id},
         {"org_label", rec.org_label},
         {"distance_km", rec.distance_km},
         {"day", rec.day},
         {"video_id", rec.video_id},
         {"video_rank", rec.video_rank}};
  return j.dump();
}

std::optional<SessionMeta> meta_from_jsonl(const std::string &line) {
  auto j = parse_line(line);
  if (!j) return std::nullopt;
  SessionMeta m;
  auto session = get_str(*j, "session_id");
  auto client_ip = get_str(*j, "client_ip");
  auto ua = get_str(*j, "user_agent");
  auto cdn_ip = get_str(*j, "cdn_client_ip");
  auto cdn_ua = get_str(*j, "cdn_user_agent");
  auto video_length = get_num(*j, "video_length");
  auto tau = get_num(*j, "chunk_duration");
  auto pop = get_str(*j, "pop_id");
  auto server = get_str(*j, "server_id");
  auto org = get_str(*j, "org_label");
  auto distance = get_num(*j, "distance_km");
  auto day = get_int(*j, "day");
  auto video_id = get_int(*j, "video_id");
  auto video_rank = get_int(*j, "video_rank");
  if (!session || !client_ip || !ua || !cdn_ip || !cdn_ua || !video_length || !tau || !pop ||
      !server || !org || !distance || !day || !video_id || !video_rank) {
    return std::nullopt;
  }
  if (*video_length <= 0 || *tau <= 0 || *distance < 0) return std::nullopt;
  m.session_id = *session;
  m.client_ip = *client_ip;
  m.user_agent = *ua;
  m.cdn_client_ip = *cdn_ip;
  m.cdn_user_agent = *cdn_ua;
  m.video_length_s = *video_length;
  m.chunk_duration_s = *tau;
  m.pop_id = *pop;
  m.server_id = *server;
  m.org_label = *org;
  m.distance_km = *distance;
  m.day = static_cast<int>(*day);
  m.video_id = static_cast<int>(*video_id);
  m.video_rank = static_cast<int>(*video_rank);
  return m;
}

std::string to_jsonl(const GroundTruth &rec) {
  json j{{"session_id", rec.session_id},
         {"chunk_id", rec.chunk_id},
         {"injected", to_string(rec.injected)},
         {"params", evidence_json(rec.params)}};
  return j.dump();
}

std::optional<GroundTruth> truth_from_jsonl(const std::string &line) {
  auto j = parse_line(line);
  if (!j) return std::nullopt;
  GroundTruth t;
  auto session = get_str(*j, "session_id");
  auto chunk = get_int(*j, "chunk_id");
  auto kind_text = get_str(*j, "injected");
  auto params = evidence_from(*j, "params");
  if (!session || !chunk || !kind_text || !params) return std::nullopt;
  auto kind = parse_label_kind(*kind_text);
  if (!kind) return std::nullopt;
  t.session_id = *session;
  t.chunk_id = static_cast<int>(*chunk);
  t.injected = *kind;
  t.params = std::move(*params);
  return t;
}

std::string to_jsonl(const DiagnosisLabel &rec) {
  json secondary = json::array();
  for (LabelKind kind : rec.secondary) secondary.push_back(to_string(kind));
  json j{{"session_id", rec.session_id},
         {"chunk_id", rec.chunk_id},
         {"label", to_string(rec.label)},
         {"secondary", secondary},
         {"evidence", evidence_json(rec.evidence)}};
  return j.dump();
}

std::optional<DiagnosisLabel> label_from_jsonl(const std::string &line) {
  auto j = parse_line(line);
  if (!j) return std::nullopt;
  DiagnosisLabel l;
  auto session = get_str(*j, "session_id");
  auto chunk = get_int(*j, "chunk_id");
  auto kind_text = get_str(*j, "label");
  auto evidence = evidence_from(*j, "evidence");
  auto secondary_it = j->find("secondary");
  if (!session || !chunk || !kind_text || !evidence || secondary_it == j->end() ||
      !secondary_it->is_array()) {
    return std::nullopt;
  }
  auto kind = parse_label_kind(*kind_text);
  if (!kind) return std::nullopt;
  for (const auto &entry : *secondary_it) {
    if (!entry.is_string()) return std::nullopt;
    auto sec = parse_label_kind(entry.get<std::string>());
    if (!sec) return std::nullopt;
    l.secondary.push_back(*sec);
  }
  l.session_id = *session;
  l.chunk_id = static_cast<int>(*chunk);
  l.label = *kind;
  l.evidence = std::move(*evidence);
  return l;
}

std::string to_jsonl(const JoinedChunk &rec) {
  json snaps = json::array();
  for (const auto &s : rec.snapshots) snaps.push_back(snapshot_body(s));
  json j{{"session_id", rec.player.session_id},
         {"chunk_id", rec.player.chunk_id},
         {"d_fb", ms(rec.player.d_fb)},
         {"d_lb", ms(rec.player.d_lb)},
         {"bitrate", rec.player.bitrate_kbps},
         {"buf_count", rec.player.buf_count},
         {"buf_dur", ms(rec.player.buf_dur)},
         {"vis", rec.player.vis},
         {"avg_fr", rec.player.avg_fr},
         {"drop_fr", rec.player.drop_fr},
         {"d_wait", ms(rec.cdn.d_wait)},
         {"d_open", ms(rec.cdn.d_open)},
         {"d_read", ms(rec.cdn.d_read)},
         {"d_be", ms(rec.cdn.d_be)},
         {"cache_status", to_string(rec.cdn.cache_status)},
         {"chunk_size", rec.cdn.chunk_size},
         {"snapshots", snaps},
         {"rtt0_ub", ms(rec.rtt0_ub)},
         {"tp_inst", rec.tp_inst},
         {"perf_score", rec.perf_score},
         {"server_latency", ms(rec.server_latency)},
         {"inconsistent_timing", rec.inconsistent_timing}};
  return j.dump();
}

std::optional<JoinedChunk> joined_from_jsonl(const std::string &line) {
  auto j = parse_line(line);
  if (!j) return std::nullopt;

  auto player = player_from_jsonl(line);
  auto cdn = cdn_from_jsonl(line);
  if (!player || !cdn) return std::nullopt;

  auto snaps_it = j->find("snapshots");
  if (snaps_it == j->end() || !snaps_it->is_array()) return std::nullopt;
  std::vector<TcpSnapshot> snapshots;
  snapshots.reserve(snaps_it->size());
  for (const auto &body : *snaps_it) {
    auto s = snapshot_from_body(body);
    if (!s) return std::nullopt;
    s->session_id = player->session_id;
    s->chunk_id = player->chunk_id;
    snapshots.push_back(std::move(*s));
  }

  auto rtt0 = get_ms(*j, "rtt0_ub");
  auto tp = get_num(*j, "tp_inst");
  auto perf = get_num(*j, "perf_score");
  auto server = get_ms(*j, "server_latency");
  auto flagged = get_bool(*j, "inconsistent_timing");
  if (!rtt0 || !tp || !perf || !server || !flagged) return std::nullopt;

  JoinedChunk joined;
  joined.player = std::move(*player);
  joined.cdn = std::move(*cdn);
  joined.snapshots = std::move(snapshots);
  joined.rtt0_ub = *rtt0;
  joined.tp_inst = *tp;
  joined.perf_score = *perf;
  joined.server_latency = *server;
  joined.inconsistent_timing = *flagged;
  return joined;
}

} // namespace chunkscope
