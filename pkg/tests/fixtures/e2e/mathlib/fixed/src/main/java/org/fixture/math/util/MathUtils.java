package org.fixture.math.util;

public final class MathUtils {

    private MathUtils() {
    }

    public static boolean equals(double x, double y) {
        return x == y;
    }

    public static boolean equals(float x, float y) {
        return x == y;
    }

    public static boolean equals(double[] x, double[] y) {
        if (x == null || y == null) {
            return x == null && y == null;
        }
        if (x.length != y.length) {
            return false;
        }
        for (int i = 0; i < x.length; i++) {
            if (!equals(x[i], y[i])) {
                return false;
            }
        }
        return true;
    }

    public static long factorial(int n) {
        if (n < 0) {
            throw new IllegalArgumentException("n must be non-negative");
        }
        long result = 1;
        for (int i = 2; i <= n; i++) {
            result *= i;
        }
        return result;
    }
}
