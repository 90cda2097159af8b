import time


class Timer:
    """Pausable wall clock; paused spans are excluded from the elapsed time."""

    def __init__(self):
        self.start_time = None
        self.elapsed = 0.0
        self.paused = False

    def start(self):
        if self.start_time is None:
            self.start_time = time.perf_counter()
        elif self.paused:
            self.start_time = time.perf_counter() - self.elapsed
            self.paused = False
        return self

    def pause(self):
        if self.start_time is not None and not self.paused:
            self.elapsed = time.perf_counter() - self.start_time
            self.paused = True

    def get_elapsed_time(self):
        if self.start_time is None:
            return 0.0
        if self.paused:
            return self.elapsed
        return time.perf_counter() - self.start_time
