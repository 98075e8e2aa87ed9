package org.fixture.math.fraction;

import junit.framework.TestCase;

public class FractionTest extends TestCase {

    public void testConstructor() {
        Fraction fraction = new Fraction(1, 2);
        assertEquals(1, fraction.getNumerator());
        assertEquals(2, fraction.getDenominator());
        assertTrue(fraction.getDenominator() > 0);
    }

    public void testCompareTo() {
        Fraction half = new Fraction(1, 2);
        Fraction third = new Fraction(1, 3);
        assertTrue(half.compareTo(third) > 0);
        assertTrue(third.compareTo(half) < 0);
        assertEquals(0, half.compareTo(new Fraction(2, 4)));
    }
}
