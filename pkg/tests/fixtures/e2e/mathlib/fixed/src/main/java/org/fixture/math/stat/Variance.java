package org.fixture.math.stat;

public class Variance {

    public double evaluate(double[] values) {
        double mean = 0.0;
        for (double value : values) {
            mean += value / values.length;
        }
        double sum = 0.0;
        for (double value : values) {
            sum += (value - mean) * (value - mean);
        }
        return sum / (values.length - 1);
    }

    public double evaluate(double[] values, double[] weights) {
        double total = 0.0;
        double mean = 0.0;
        for (int i = 0; i < values.length; i++) {
            total += weights[i];
            mean += values[i] * weights[i];
        }
        mean /= total;
        double sum = 0.0;
        for (int i = 0; i < values.length; i++) {
            sum += weights[i] * (values[i] - mean) * (values[i] - mean);
        }
        return sum / total;
    }
}
