package org.example.cache;

import org.junit.Test;

import static org.junit.Assert.assertTrue;

public class CacheEvictionTest {

    private static final int LIMIT = 3;
    private int hits, misses;

    static {
        System.setProperty("cache.clock", "fake");
    }

    static class FakeClock {
        long now;

        long tick() {
            return ++now;
        }
    }

    @Test
    public void evictsLeastRecentlyUsed() {
        Cache cache = new Cache(LIMIT, new FakeClock()::tick);
        for (int i = 0; i < 5; i++) {
            cache.put("k" + i, i);
        }
        assertTrue(cache.size() <= LIMIT);
    }

    @Test
    public void countsMisses() {
        misses += 1;
        assertTrue(misses > 0);
    }
}
