package net.fixture.webparse;

import java.util.List;

import org.junit.Test;

import static org.junit.Assert.*;

public class HtmlScannerTest {

    @Test
    public void testFindTags() {
        HtmlScanner scanner = new HtmlScanner();
        List<String> tags = scanner.findTags("<html><body><p>hi</p></body></html>");
        assertEquals(6, tags.size());
        assertEquals("html", tags.get(0));
    }

    @Test
    public void testSkipComments() {
        HtmlScanner scanner = new HtmlScanner();
        List<String> tags = scanner.findTags("<div><!-- <span>x</span> --></div>");
        assertEquals(2, tags.size());
        assertFalse(tags.contains("span"));
    }
}
