package fx;

import java.io.IOException;
import java.io.Reader;

public class Loader {
    private final String path = "data.txt";

    public String load(Reader reader) throws IOException {
        StringBuilder sb = new StringBuilder();
        try (Reader in = reader) {
            int c;
            while ((c = in.read()) != -1) {
                sb.append((char) c);
            }
        } catch (IOException e) {
            throw e;
        } catch (RuntimeException e) {
            return "error: " + e.getMessage();
        } finally {
            sb.append("!");
        }
        return sb.toString();
    }
}
