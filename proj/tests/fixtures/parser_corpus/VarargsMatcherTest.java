package org.example.match;

import org.junit.Test;

import static org.junit.Assert.assertTrue;
import static org.junit.Assert.assertFalse;

public class VarargsMatcherTest {

    private static boolean anyStartsWith(String prefix, String... parts) {
        for (String part : parts) {
            if (part.startsWith(prefix)) {
                return true;
            }
        }
        return false;
    }

    @Test
    public void matchesFirstOfMany() {
        assertTrue(anyStartsWith("ab", "abc", "zzz"));
    }

    @Test
    public void emptyVarargsNeverMatch() {
        assertFalse(anyStartsWith("ab"));
    }
}
