#include "thermofoot/acquisition.hpp"

#include <boost/asio.hpp>

#include <atomic>
#include <mutex>
#include <thread>

namespace thermofoot {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

void serve_connection(tcp::socket socket, const SourceFactory& factory) {
  boost::system::error_code ec;
  try {
    const FrameSource source = factory();
    run_sequence(source, [&](const WireMessage& m) {
      if (ec) return;
      asio::write(socket, asio::buffer(encode_message(m)), ec);
    });
  } catch (const Error& e) {
    if (!ec) asio::write(socket, asio::buffer(encode_message(error_message(e.code(), e.what()))), ec);
  }
  socket.shutdown(tcp::socket::shutdown_both, ec);
  socket.close(ec);
}

} // namespace

struct CaptureServer::Impl {
  SourceFactory factory;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::atomic<bool> stopping{false};
  std::thread accept_thread;
  std::mutex workers_mutex;
  std::vector<std::thread> workers;

  void spawn(tcp::socket socket) {
    std::lock_guard lock(workers_mutex);
    workers.emplace_back(
        [this](tcp::socket s) { serve_connection(std::move(s), factory); }, std::move(socket));
  }

  void join_workers() {
    std::vector<std::thread> done;
    {
      std::lock_guard lock(workers_mutex);
      done.swap(workers);
    }
    for (auto& t : done) t.join();
  }
};

CaptureServer::CaptureServer(SourceFactory factory, std::uint16_t port, const std::string& address)
    : impl_(std::make_unique<Impl>()) {
  impl_->factory = std::move(factory);
  boost::system::error_code ec;
  const tcp::endpoint ep(asio::ip::make_address(address, ec), port);
  if (ec) throw Error(Errc::InvalidArgument, "invalid listen address: " + address);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
  impl_->acceptor.bind(ep, ec);
  if (ec) throw Error(Errc::IoError, "cannot bind " + address + ":" + std::to_string(port) + ": " + ec.message());
  impl_->acceptor.listen();
}

CaptureServer::~CaptureServer() { stop(); }

std::uint16_t CaptureServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void CaptureServer::start() {
  impl_->accept_thread = std::thread([this] {
    while (!impl_->stopping) {
      tcp::socket socket(impl_->io);
      boost::system::error_code ec;
      impl_->acceptor.accept(socket, ec);
      if (ec || impl_->stopping) break;
      impl_->spawn(std::move(socket));
    }
  });
}

void CaptureServer::serve(int connections) {
  for (int i = 0; i < connections; ++i) {
    tcp::socket socket(impl_->io);
    impl_->acceptor.accept(socket);
    impl_->spawn(std::move(socket));
  }
  impl_->join_workers();
}

void CaptureServer::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  if (impl_->accept_thread.joinable()) {
    // Wake the blocking accept with a throwaway connection.
    boost::system::error_code ec;
    tcp::socket poke(impl_->io);
    poke.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), port()), ec);
    impl_->accept_thread.join();
  }
  impl_->join_workers();
  boost::system::error_code ec;
  impl_->acceptor.close(ec);
}

ReceivedSequence fetch_sequence(const std::string& host, std::uint16_t port) {
  asio::io_context io;
  tcp::socket socket(io);
  boost::system::error_code ec;
  tcp::resolver resolver(io);
  const auto endpoints = resolver.resolve(host, std::to_string(port), ec);
  if (!ec) asio::connect(socket, endpoints, ec);
  if (ec) throw Error(Errc::IoError, "cannot connect to " + host + ":" + std::to_string(port) + ": " + ec.message());

  SequenceReceiver receiver;
  std::array<std::uint8_t, 8192> chunk{};
  while (!receiver.finished()) {
    const std::size_t n = socket.read_some(asio::buffer(chunk), ec);
    if (n > 0) receiver.feed(std::span<const std::uint8_t>(chunk.data(), n));
    if (ec) break;  // eof or reset: return whatever arrived
  }
  return receiver.result();
}

} // namespace thermofoot
