#pragma once

#include <cstddef>
#include <cstdint>
#include <queue>
#include <vector>

namespace aquaplan::simkit {

template <class Kind>
struct Event {
    double time = 0.0;
    std::uint64_t sequence = 0;
    Kind kind{};
};

/// Future-event list ordered by (time, insertion sequence), so simultaneous
/// events pop in the order they were scheduled.
template <class Kind>
class EventQueue {
public:
    void schedule(double time, Kind kind) { heap_.push({time, next_++, kind}); }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    const Event<Kind>& peek() const { return heap_.top(); }

    Event<Kind> pop()
    {
        Event<Kind> e = heap_.top();
        heap_.pop();
        return e;
    }

private:
    struct Later {
        bool operator()(const Event<Kind>& a, const Event<Kind>& b) const
        {
            return a.time != b.time ? a.time > b.time : a.sequence > b.sequence;
        }
    };
    std::priority_queue<Event<Kind>, std::vector<Event<Kind>>, Later> heap_;
    std::uint64_t next_ = 0;
};

} // namespace aquaplan::simkit
