#include "thermofoot/acquisition.hpp"

#include <json.hpp>
#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <utility>

namespace thermofoot {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::uint64_t uint(int width) {
    need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t(bytes_[pos_ + i]) << (8 * i);
    pos_ += width;
    return v;
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(Errc::ParseError, "frame payload truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

WireMessage json_message(MessageType type, const nlohmann::json& j) {
  const std::string s = j.dump();
  return {type, std::vector<std::uint8_t>(s.begin(), s.end())};
}

} // namespace

bool known_message_type(std::uint8_t t) {
  switch (static_cast<MessageType>(t)) {
    case MessageType::Frame:
    case MessageType::SequenceStart:
    case MessageType::SequenceEnd:
    case MessageType::Error: return true;
  }
  return false;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void append_message(std::vector<std::uint8_t>& out, const WireMessage& m) {
  if (m.payload.size() > kMaxPayload) throw Error(Errc::InvalidArgument, "payload exceeds protocol limit");
  out.insert(out.end(), kWireMagic.begin(), kWireMagic.end());
  out.push_back(kProtocolVersion);
  out.push_back(static_cast<std::uint8_t>(m.type));
  put_u32(out, static_cast<std::uint32_t>(m.payload.size()));
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  put_u32(out, crc32(m.payload));
}

std::vector<std::uint8_t> encode_message(const WireMessage& m) {
  std::vector<std::uint8_t> out;
  out.reserve(kWireHeaderSize + m.payload.size() + kWireTrailerSize);
  append_message(out, m);
  return out;
}

std::vector<std::uint8_t> encode_frame_payload(const RawFrame& f) {
  if (f.counts.rows() > 0xFFFF || f.counts.cols() > 0xFFFF || f.frame_id.size() > 0xFFFF)
    throw Error(Errc::InvalidArgument, "frame too large for wire encoding");
  std::vector<std::uint8_t> out;
  out.reserve(17 + f.frame_id.size() + 2 * f.counts.size());
  put_u16(out, static_cast<std::uint16_t>(f.counts.cols()));
  put_u16(out, static_cast<std::uint16_t>(f.counts.rows()));
  out.push_back(static_cast<std::uint8_t>(f.view.kind));
  put_u16(out, static_cast<std::uint16_t>(f.view.angle_deg));
  put_u64(out, static_cast<std::uint64_t>(f.captured_at_ms));
  put_u16(out, static_cast<std::uint16_t>(f.frame_id.size()));
  out.insert(out.end(), f.frame_id.begin(), f.frame_id.end());
  for (Eigen::Index i = 0; i < f.counts.size(); ++i) put_u16(out, f.counts.data()[i]);
  return out;
}

RawFrame decode_frame_payload(std::span<const std::uint8_t> payload) {
  Reader in(payload);
  RawFrame f;
  const auto cols = static_cast<int>(in.uint(2));
  const auto rows = static_cast<int>(in.uint(2));
  const auto kind = in.uint(1);
  const auto angle = static_cast<int>(in.uint(2));
  if (kind == static_cast<std::uint8_t>(ViewKind::Plantar))
    f.view = View::plantar();
  else if (kind == static_cast<std::uint8_t>(ViewKind::Periphery) && valid_periphery_angle(angle))
    f.view = View::periphery(angle);
  else
    throw Error(Errc::ParseError, "frame payload has an invalid view");
  f.captured_at_ms = static_cast<std::int64_t>(in.uint(8));
  f.frame_id = in.text(in.uint(2));
  if (in.remaining() != std::size_t(rows) * cols * 2)
    throw Error(Errc::ParseError, "frame payload size does not match its dimensions");
  f.counts.resize(rows, cols);
  for (Eigen::Index i = 0; i < f.counts.size(); ++i) f.counts.data()[i] = static_cast<std::uint16_t>(in.uint(2));
  return f;
}

WireMessage frame_message(const RawFrame& frame) { return {MessageType::Frame, encode_frame_payload(frame)}; }

WireMessage sequence_start_message(int expected_frames) {
  return json_message(MessageType::SequenceStart, {{"expected_frames", expected_frames}});
}

WireMessage sequence_end_message(int frames_sent) {
  return json_message(MessageType::SequenceEnd, {{"frames_sent", frames_sent}});
}

WireMessage error_message(Errc code, const std::string& detail) {
  return json_message(MessageType::Error, {{"error", to_string(code)}, {"detail", detail}});
}

// Decoder

void StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  parse();
  if (pos_ > 0 && (pos_ >= (1u << 16) || pos_ * 2 >= buffer_.size())) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos_));
    consumed_ += pos_;
    pos_ = 0;
  }
}

std::vector<WireMessage> StreamDecoder::take() { return std::exchange(ready_, {}); }

void StreamDecoder::skip(std::size_t n) { pos_ += n; }

void StreamDecoder::parse() {
  for (;;) {
    const auto begin = buffer_.begin() + static_cast<std::ptrdiff_t>(pos_);
    const auto hit = std::search(begin, buffer_.end(), kWireMagic.begin(), kWireMagic.end());
    if (hit == buffer_.end()) {
      // Keep a trailing partial magic; everything before it is garbage.
      std::size_t keep = 0;
      const std::size_t avail = buffer_.size() - pos_;
      for (std::size_t k = std::min<std::size_t>(3, avail); k > 0; --k)
        if (std::equal(buffer_.end() - static_cast<std::ptrdiff_t>(k), buffer_.end(), kWireMagic.begin())) {
          keep = k;
          break;
        }
      skipped_ += avail - keep;
      skip(avail - keep);
      return;
    }
    const auto gap = static_cast<std::size_t>(hit - begin);
    skipped_ += gap;
    skip(gap);

    const std::size_t avail = buffer_.size() - pos_;
    if (avail < kWireHeaderSize) return;
    const std::uint8_t* h = buffer_.data() + pos_;
    const std::size_t offset = consumed_ + pos_;
    const std::uint8_t version = h[4], type = h[5];
    const std::uint32_t len = get_u32(h + 6);
    if (version != kProtocolVersion || !known_message_type(type) || len > kMaxPayload) {
      std::string why = version != kProtocolVersion ? "unsupported protocol version"
                        : !known_message_type(type) ? "unknown message type"
                                                    : "payload length exceeds limit";
      issues_.push_back({Errc::ParseError, offset, why});
      skipped_ += 1;
      skip(1);
      continue;
    }
    const std::size_t total = kWireHeaderSize + len + kWireTrailerSize;
    if (avail < total) return;

    std::span<const std::uint8_t> payload(h + kWireHeaderSize, len);
    const std::uint32_t expected = get_u32(h + kWireHeaderSize + len);
    if (crc32(payload) != expected) {
      issues_.push_back({Errc::ChecksumMismatch, offset, "checksum mismatch; message dropped"});
      ++dropped_;
    } else {
      ready_.push_back({static_cast<MessageType>(type), {payload.begin(), payload.end()}});
    }
    skip(total);
  }
}

std::vector<WireMessage> decode_stream(std::span<const std::uint8_t> bytes, std::vector<DecodeIssue>* issues) {
  StreamDecoder d;
  d.feed(bytes);
  if (issues) *issues = d.issues();
  return d.take();
}

// Capture sequence

std::string to_string(CaptureState s) {
  switch (s) {
    case CaptureState::Idle: return "Idle";
    case CaptureState::PlantarCapture: return "PlantarCapture";
    case CaptureState::Periphery0: return "PeripheryCapture(0)";
    case CaptureState::Periphery90: return "PeripheryCapture(90)";
    case CaptureState::Periphery180: return "PeripheryCapture(180)";
    case CaptureState::Periphery270: return "PeripheryCapture(270)";
    case CaptureState::Complete: return "Complete";
    case CaptureState::Aborted: return "Aborted";
  }
  return "?";
}

View requested_view(CaptureState s) {
  switch (s) {
    case CaptureState::PlantarCapture: return View::plantar();
    case CaptureState::Periphery0: return View::periphery(0);
    case CaptureState::Periphery90: return View::periphery(90);
    case CaptureState::Periphery180: return View::periphery(180);
    case CaptureState::Periphery270: return View::periphery(270);
    default: throw Error(Errc::InvalidArgument, "no view is captured in state " + to_string(s));
  }
}

FrameSource phantom_source(const PhantomSpec& spec, std::uint64_t seed) {
  return [spec, seed](const View& v) {
    SourcePoll p;
    p.status = SourceStatus::Ready;
    p.frame = v.kind == ViewKind::Plantar ? generate(spec, seed).plantar : generate_periphery(spec, v.angle_deg, seed);
    return p;
  };
}

FrameSource recorded_source(std::vector<RawFrame> frames) {
  auto state = std::make_shared<std::pair<std::vector<RawFrame>, std::size_t>>(std::move(frames), 0);
  return [state](const View&) {
    SourcePoll p;
    if (state->second >= state->first.size()) {
      p.status = SourceStatus::Exhausted;
      return p;
    }
    p.status = SourceStatus::Ready;
    p.frame = state->first[state->second++];
    return p;
  };
}

void CaptureSequence::enter(CaptureState s) {
  state_ = s;
  history_.push_back(s);
}

std::vector<WireMessage> CaptureSequence::abort(Errc code, const std::string& detail) {
  if (finished()) return {};
  enter(CaptureState::Aborted);
  return {error_message(code, detail)};
}

std::vector<WireMessage> CaptureSequence::step(const FrameSource& source) {
  if (finished()) return {};
  if (state_ == CaptureState::Idle) {
    enter(CaptureState::PlantarCapture);
    return {sequence_start_message(kSequenceFrames)};
  }
  const View want = requested_view(state_);
  SourcePoll poll = source(want);
  switch (poll.status) {
    case SourceStatus::NotReady: return {};
    case SourceStatus::Exhausted:
      return abort(Errc::SourceExhausted,
                   "source exhausted after " + std::to_string(frame_ids_.size()) + " of " +
                       std::to_string(kSequenceFrames) + " frames");
    case SourceStatus::Ready: break;
  }
  if (!(poll.frame.view == want))
    return abort(Errc::InvalidArgument, "source delivered view " + poll.frame.view.label() + " while " +
                                            want.label() + " was requested");
  std::vector<WireMessage> out{frame_message(poll.frame)};
  frame_ids_.push_back(poll.frame.frame_id);
  enter(static_cast<CaptureState>(static_cast<int>(state_) + 1));
  if (state_ == CaptureState::Complete) out.push_back(sequence_end_message(static_cast<int>(frame_ids_.size())));
  return out;
}

SequenceRun run_sequence(const FrameSource& source, const std::function<void(const WireMessage&)>& emit,
                         int max_polls) {
  CaptureSequence seq;
  SequenceRun run;
  int idle = 0;
  while (!seq.finished()) {
    const bool polling = seq.state() != CaptureState::Idle;
    const auto before = seq.state();
    std::vector<WireMessage> msgs = seq.step(source);
    if (polling) ++run.polls;
    idle = seq.state() == before ? idle + 1 : 0;
    if (idle >= max_polls) msgs = seq.abort(Errc::SourceExhausted, "source not ready after repeated polls");
    for (const auto& m : msgs) emit(m);
  }
  run.final_state = seq.state();
  run.history = seq.history();
  run.frame_ids = seq.frame_ids();
  return run;
}

void SequenceReceiver::feed(std::span<const std::uint8_t> bytes) {
  decoder_.feed(bytes);
  for (auto& m : decoder_.take()) {
    switch (m.type) {
      case MessageType::SequenceStart: result_.started = true; break;
      case MessageType::SequenceEnd: result_.complete = true; break;
      case MessageType::Error: result_.error = std::string(m.payload.begin(), m.payload.end()); break;
      case MessageType::Frame:
        try {
          result_.frames.push_back(decode_frame_payload(m.payload));
        } catch (const Error& e) {
          payload_issues_.push_back({e.code(), 0, e.what()});
        }
        break;
    }
  }
  result_.issues = decoder_.issues();
  result_.issues.insert(result_.issues.end(), payload_issues_.begin(), payload_issues_.end());
  result_.dropped = decoder_.dropped();
}

} // namespace thermofoot
