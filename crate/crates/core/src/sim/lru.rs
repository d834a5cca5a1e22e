/// Exact fully-associative LRU over a dense range of line ids.
///
/// Recency is an intrusive doubly linked list threaded through arrays indexed
/// by line id, so every access is O(1).
pub(crate) struct Lru {
    prev: Vec<u32>,
    next: Vec<u32>,
    resident: Vec<bool>,
    dirty: Vec<bool>,
    /// Sentinel node closing the circular list; `next[head]` is the MRU line.
    head: u32,
    len: usize,
    capacity: usize,
}

pub(crate) enum Access {
    Hit,
    /// Miss, possibly evicting a dirty line (which must be written back).
    Miss { dirty_eviction: bool },
}

impl Lru {
    pub fn new(lines: usize, capacity: usize) -> Self {
        let head = lines as u32;
        let mut prev = vec![0; lines + 1];
        let mut next = vec![0; lines + 1];
        prev[lines] = head;
        next[lines] = head;
        Lru {
            prev,
            next,
            resident: vec![false; lines],
            dirty: vec![false; lines],
            head,
            len: 0,
            capacity: capacity.max(1),
        }
    }

    #[inline]
    fn unlink(&mut self, x: u32) {
        let (p, n) = (self.prev[x as usize], self.next[x as usize]);
        self.next[p as usize] = n;
        self.prev[n as usize] = p;
    }

    #[inline]
    fn push_front(&mut self, x: u32) {
        let h = self.head;
        let first = self.next[h as usize];
        self.next[x as usize] = first;
        self.prev[x as usize] = h;
        self.prev[first as usize] = x;
        self.next[h as usize] = x;
    }

    #[inline]
    pub fn access(&mut self, line: u32, write: bool) -> Access {
        let i = line as usize;
        if self.resident[i] {
            self.unlink(line);
            self.push_front(line);
            self.dirty[i] |= write;
            return Access::Hit;
        }
        let mut dirty_eviction = false;
        if self.len == self.capacity {
            let victim = self.prev[self.head as usize];
            self.unlink(victim);
            let v = victim as usize;
            self.resident[v] = false;
            dirty_eviction = std::mem::replace(&mut self.dirty[v], false);
            self.len -= 1;
        }
        self.resident[i] = true;
        self.dirty[i] = write;
        self.push_front(line);
        self.len += 1;
        Access::Miss { dirty_eviction }
    }

    /// Number of dirty resident lines (written back when the run ends).
    pub fn dirty_resident(&self) -> u64 {
        self.resident
            .iter()
            .zip(&self.dirty)
            .filter(|(r, d)| **r && **d)
            .count() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evicts_least_recent() {
        let mut c = Lru::new(4, 2);
        assert!(matches!(c.access(0, false), Access::Miss { .. }));
        assert!(matches!(c.access(1, true), Access::Miss { .. }));
        assert!(matches!(c.access(0, false), Access::Hit));
        // 1 is now LRU and dirty
        assert!(matches!(c.access(2, false), Access::Miss { dirty_eviction: true }));
        assert!(matches!(c.access(0, false), Access::Hit));
        assert!(matches!(c.access(1, false), Access::Miss { dirty_eviction: false }));
        assert_eq!(c.dirty_resident(), 0);
    }
}
