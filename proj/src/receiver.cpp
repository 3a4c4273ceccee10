#include "peakray/receiver.hpp"

#include <array>
#include <stdexcept>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/udp.hpp>

namespace peakray {

wire::DecodeError PacketIntake::handle(std::span<const std::uint8_t> datagram) {
  ++datagrams_;
  const auto r = wire::decode(datagram);
  if (!r) {
    ++malformed_;
    return r.error;
  }
  auto& newest = newest_[static_cast<int>(r.value->sample.device)];
  const std::uint16_t seq = r.value->seq;
  if (newest && static_cast<std::int16_t>(static_cast<std::uint16_t>(seq - *newest)) < 0) {
    ++reordered_;
  } else {
    newest = seq;
  }
  ++delivered_;
  deliver_(r.value->sample);
  return wire::DecodeError::None;
}

ReceiverStats PacketIntake::stats() const {
  return {datagrams_.load(), delivered_.load(), malformed_.load(), reordered_.load()};
}

struct UdpReceiver::Impl {
  boost::asio::io_context io;
  boost::asio::ip::udp::socket socket{io};
  boost::asio::ip::udp::endpoint sender;
  std::array<std::uint8_t, 2048> buffer{};
  std::thread thread;
  PacketIntake* intake = nullptr;

  void arm() {
    socket.async_receive_from(boost::asio::buffer(buffer), sender,
                              [this](const boost::system::error_code& ec, std::size_t n) {
                                if (ec == boost::asio::error::operation_aborted) return;
                                if (!ec) intake->handle(std::span(buffer.data(), n));
                                arm();
                              });
  }
};

UdpReceiver::UdpReceiver(std::uint16_t port, PacketIntake::Deliver deliver)
    : intake_(std::move(deliver)), impl_(std::make_unique<Impl>()) {
  impl_->intake = &intake_;
  boost::system::error_code ec;
  impl_->socket.open(boost::asio::ip::udp::v4(), ec);
  if (!ec) impl_->socket.bind({boost::asio::ip::udp::v4(), port}, ec);
  if (ec) throw std::runtime_error("cannot bind UDP port " + std::to_string(port) + ": " + ec.message());
  impl_->socket.set_option(boost::asio::socket_base::receive_buffer_size(1 << 20), ec);
  impl_->arm();
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

UdpReceiver::~UdpReceiver() { stop(); }

std::uint16_t UdpReceiver::port() const { return impl_->socket.local_endpoint().port(); }

void UdpReceiver::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->io.stop();
  impl_->thread.join();
}

}  // namespace peakray
