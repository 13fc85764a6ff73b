package org.example.retry;

import java.util.concurrent.atomic.AtomicInteger;

import org.junit.Test;

import static org.junit.Assert.assertEquals;

public class RetryPolicyTest {

    private final AtomicInteger count = new AtomicInteger();

    private final Runnable task = new Runnable() {
        @Override
        public void run() {
            count.incrementAndGet();
        }
    };

    @Test
    public void runsUntilBudgetExhausted() {
        RetryPolicy policy = RetryPolicy.fixed(3);
        policy.run(task);
        assertEquals(3, count.get());
    }

    @Test
    public void zeroBudgetNeverRuns() {
        RetryPolicy.fixed(0).run(task);
        assertEquals(0, count.get());
    }
}
