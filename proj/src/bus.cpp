#include "fieldguard/bus.hpp"

#include <algorithm>

namespace fieldguard {

void EventLoop::at(Us t, int lane, std::function<void()> fn) {
  if (t < now_) throw SimError("event scheduled in the past");
  queue_.push(Ev{t, lane, next_index_++, std::move(fn)});
}

void EventLoop::run_until(Us t) {
  if (t < now_) throw SimError("run_until target precedes the clock");
  while (!queue_.empty() && queue_.top().at <= t) {
    Ev ev = queue_.top();
    queue_.pop();
    if (pacing_ && ev.at > now_) pacing_(ev.at - now_);
    now_ = ev.at;
    ev.fn();
  }
  now_ = t;
}

Us EventLoop::run_all() {
  while (!queue_.empty()) {
    Ev ev = queue_.top();
    queue_.pop();
    if (pacing_ && ev.at > now_) pacing_(ev.at - now_);
    now_ = ev.at;
    ev.fn();
  }
  return now_;
}

Bus::Bus(EventLoop& loop, BusConfig cfg) : loop_(loop), cfg_(cfg) {
  if (cfg_.baud < 1200 || cfg_.baud > 19200)
    throw SimError("baud outside the legacy channel range 1200..19200");
}

AttachmentId Bus::attach(BusEndpoint* endpoint) {
  if (by_endpoint_.count(endpoint)) throw SimError("DuplicateAttachment");
  AttachmentId id = next_id_++;
  attachments_[id] = endpoint;
  by_endpoint_[endpoint] = id;
  port_free_[id] = 0;
  return id;
}

void Bus::detach(AttachmentId id) {
  auto it = attachments_.find(id);
  if (it == attachments_.end()) throw SimError("UnknownAttachment");
  by_endpoint_.erase(it->second);
  attachments_.erase(it);
  port_free_.erase(id);
}

Us Bus::transmission_delay(std::size_t frame_bytes) const {
  // 10 bits per byte on the wire; ceil to whole microseconds.
  const auto bits = static_cast<Us>(frame_bytes) * 10;
  return (bits * kSecond + cfg_.baud - 1) / cfg_.baud;
}

Us Bus::transmit(AttachmentId origin, Frame frame) {
  if (!attachments_.count(origin)) throw SimError("UnknownAttachment");
  const Us start = std::max(loop_.now(), port_free_[origin]);
  const Us tx_done = start + transmission_delay(frame.size());
  port_free_[origin] = tx_done;
  const Us delivery = tx_done + cfg_.propagation_us;
  loop_.at(delivery, EventLoop::kLaneFrameBase + origin,
           [this, origin, f = std::move(frame), delivery]() {
             BusEvent ev{delivery, origin, f};
             trace_.push_back(ev);
             // Snapshot: an endpoint detached mid-flight misses the delivery,
             // which is exactly what removal detection relies on.
             std::vector<BusEndpoint*> listeners;
             listeners.reserve(attachments_.size());
             for (const auto& [id, ep] : attachments_)
               if (id != origin) listeners.push_back(ep);
             for (auto* ep : listeners) ep->on_frame(ev);
           });
  return delivery;
}

std::vector<BusEvent> Bus::run_until(Us t) {
  const std::size_t before = trace_.size();
  loop_.run_until(t);
  return {trace_.begin() + static_cast<std::ptrdiff_t>(before), trace_.end()};
}

}  // namespace fieldguard
