#pragma once

#include "thermofoot/error.hpp"
#include "thermofoot/phantom.hpp"
#include "thermofoot/radiometry.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace thermofoot {

// Byte framing:  "NIRT" | version u8 | type u8 | length u32le | payload | crc32(payload) u32le

inline constexpr std::array<std::uint8_t, 4> kWireMagic{'N', 'I', 'R', 'T'};
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kWireHeaderSize = 10;
inline constexpr std::size_t kWireTrailerSize = 4;
inline constexpr std::uint32_t kMaxPayload = 16u << 20;

enum class MessageType : std::uint8_t {
  Frame = 0x01,
  SequenceStart = 0x02,
  SequenceEnd = 0x03,
  Error = 0x7F,
};

bool known_message_type(std::uint8_t t);

struct WireMessage {
  MessageType type = MessageType::Frame;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_message(const WireMessage& message);
void append_message(std::vector<std::uint8_t>& out, const WireMessage& message);

/// Frame payload: width u16 | height u16 | view u8 | angle u16 | captured_at i64 |
/// id_len u16 | id bytes | counts u16[height*width] row-major, all little-endian.
std::vector<std::uint8_t> encode_frame_payload(const RawFrame& frame);
RawFrame decode_frame_payload(std::span<const std::uint8_t> payload);

WireMessage frame_message(const RawFrame& frame);
WireMessage sequence_start_message(int expected_frames);
WireMessage sequence_end_message(int frames_sent);
WireMessage error_message(Errc code, const std::string& detail);

/// A problem found while decoding; the stream keeps going.
struct DecodeIssue {
  Errc code = Errc::ParseError;
  std::size_t offset = 0;  // stream offset of the offending header
  std::string detail;
};

/// Incremental decoder. Accepts arbitrary chunking; resynchronises on the next magic after
/// garbage, an unsupported header, or a checksum failure.
class StreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Messages completed so far, in stream order; clears the internal queue.
  std::vector<WireMessage> take();

  const std::vector<DecodeIssue>& issues() const { return issues_; }
  /// Well-framed messages discarded because their checksum did not verify.
  int dropped() const { return dropped_; }
  std::size_t skipped_bytes() const { return skipped_; }
  std::size_t buffered() const { return buffer_.size() - pos_; }

 private:
  void parse();
  void skip(std::size_t n);

  std::vector<std::uint8_t> buffer_;
  std::size_t pos_ = 0;
  std::size_t consumed_ = 0;  // stream offset of buffer_[0]
  std::vector<WireMessage> ready_;
  std::vector<DecodeIssue> issues_;
  int dropped_ = 0;
  std::size_t skipped_ = 0;
};

std::vector<WireMessage> decode_stream(std::span<const std::uint8_t> bytes,
                                       std::vector<DecodeIssue>* issues = nullptr);

// Capture sequence

enum class CaptureState {
  Idle,
  PlantarCapture,
  Periphery0,
  Periphery90,
  Periphery180,
  Periphery270,
  Complete,
  Aborted,
};

std::string to_string(CaptureState s);
/// View requested in a capture state; only defined for the five capture states.
View requested_view(CaptureState s);

inline constexpr int kSequenceFrames = 5;

enum class SourceStatus { Ready, NotReady, Exhausted };

struct SourcePoll {
  SourceStatus status = SourceStatus::NotReady;
  RawFrame frame;
};

/// Polled once per step with the view the sequence is waiting for.
using FrameSource = std::function<SourcePoll(const View& requested)>;

FrameSource phantom_source(const PhantomSpec& spec, std::uint64_t seed);
FrameSource recorded_source(std::vector<RawFrame> frames);

class CaptureSequence {
 public:
  CaptureState state() const { return state_; }
  bool finished() const { return state_ == CaptureState::Complete || state_ == CaptureState::Aborted; }
  /// Every state entered, starting with Idle.
  const std::vector<CaptureState>& history() const { return history_; }
  const std::vector<std::string>& frame_ids() const { return frame_ids_; }

  /// Performs one transition attempt and returns the messages it emits.
  std::vector<WireMessage> step(const FrameSource& source);
  /// Ends the sequence early with an error message.
  std::vector<WireMessage> abort(Errc code, const std::string& detail);

 private:
  void enter(CaptureState s);

  CaptureState state_ = CaptureState::Idle;
  std::vector<CaptureState> history_{CaptureState::Idle};
  std::vector<std::string> frame_ids_;
};

struct SequenceRun {
  CaptureState final_state = CaptureState::Idle;
  std::vector<CaptureState> history;
  std::vector<std::string> frame_ids;
  int polls = 0;
};

/// Drives a sequence to completion; `emit` receives each message in order. Gives up with
/// SourceExhausted after `max_polls` consecutive not-ready polls.
SequenceRun run_sequence(const FrameSource& source, const std::function<void(const WireMessage&)>& emit,
                         int max_polls = 10000);

/// Receiving side of one sequence.
struct ReceivedSequence {
  bool started = false;
  bool complete = false;
  std::vector<RawFrame> frames;
  std::optional<std::string> error;  // payload of an error message
  std::vector<DecodeIssue> issues;
  int dropped = 0;
};

class SequenceReceiver {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  bool finished() const { return result_.complete || result_.error.has_value(); }
  const ReceivedSequence& result() const { return result_; }

 private:
  StreamDecoder decoder_;
  std::vector<DecodeIssue> payload_issues_;
  ReceivedSequence result_;
};

// TCP transport. One capture sequence per accepted connection.

using SourceFactory = std::function<FrameSource()>;

class CaptureServer {
 public:
  /// Binds to `address:port`; port 0 picks an ephemeral port.
  CaptureServer(SourceFactory factory, std::uint16_t port = 0, const std::string& address = "127.0.0.1");
  ~CaptureServer();
  CaptureServer(const CaptureServer&) = delete;
  CaptureServer& operator=(const CaptureServer&) = delete;

  std::uint16_t port() const;
  /// Serves in background threads until stop().
  void start();
  /// Serves `connections` connections on the calling thread, then returns.
  void serve(int connections);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ReceivedSequence fetch_sequence(const std::string& host, std::uint16_t port);

} // namespace thermofoot
