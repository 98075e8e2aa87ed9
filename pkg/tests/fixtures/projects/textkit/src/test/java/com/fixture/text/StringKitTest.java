package com.fixture.text;

import org.junit.Test;

import static org.junit.Assert.*;

public class StringKitTest {

    @Test
    public void testCapitalize() {
        assertEquals("Hello", StringKit.capitalize("hello"));
        assertEquals("", StringKit.capitalize(""));
        assertNull(StringKit.capitalize(null));
    }

    @Test
    public void testReverseWords() {
        assertEquals("three two one", StringKit.reverseWords("one two three"));
        assertEquals("single", StringKit.reverseWords("single"));
    }
}
